use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use super::config::{MapKind, NonlinearityConfig, RunConfig, Task, TaskParams, TermConfig};
use super::manifest::Invariant;
use crate::coeff::{check_hypotheses, CoefficientKind};
use crate::error::{Error, Result};
use crate::evolution::{
    kato_ponce_sweep, picard_solve, t_star_from_norm, viscosity_convergence, viscous_solve, Nonlinearity,
    SobolevMonitor, Trajectory,
};
use crate::extension::{conormal_recover, doubling_ratio, energy_report, extend_at, ExtensionResolution, RECOVERY_TOL};
use crate::grid::Grid;
use crate::problem::Setup;
use crate::spectral::{
    norm_equivalence, smoothing_bound, standard_test_set, BesselPotential, NormEquivalenceReport, ScalarMap,
    TestFunction, NEGATIVITY_SLACK,
};
use crate::ucprobe::{dichotomy_sweep, write_sweep_csv};

/// Collects invariants and written files for the manifest.
pub struct Outcome {
    dir: PathBuf,
    pub invariants: Vec<Invariant>,
    pub files: Vec<String>,
}

impl Outcome {
    pub fn new(dir: &Path) -> Self {
        Outcome {
            dir: dir.to_path_buf(),
            invariants: vec![],
            files: vec![],
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.invariants.push(Invariant::at_most(name, value, threshold));
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.invariants.push(Invariant::at_least(name, value, threshold));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<()> {
        let path = self.path(name);
        let io = |e| Error::io(&path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
        writeln!(w, "{header}").map_err(io)?;
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(w, "{}", line.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

enum Cell {
    F(f64),
    I(usize),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.17e}"),
            Cell::I(i) => i.to_string(),
        }
    }
}

pub fn run_task(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    let problem = cfg.problem();
    let setup = problem.build()?;
    match (&cfg.task, &cfg.task_params) {
        (Task::Spectrum, TaskParams::Spectrum(p)) => spectrum(&setup, p.hypotheses, out),
        (Task::Funcalc, TaskParams::Funcalc(p)) => funcalc(cfg, &setup, p, out),
        (Task::NormEquiv, TaskParams::NormEquiv(p)) => {
            let tests = standard_test_set(cfg.grid.dim, cfg.grid.half_length, cfg.seed, p.bumps, p.modes);
            let fine = if p.refine {
                Some(problem.refined().build()?)
            } else {
                None
            };
            let constant = setup.field.kind() == CoefficientKind::Identity && cfg.coefficients.c_shift == 0.0;
            let mut reports = vec![];
            for &alpha in &cfg.alphas() {
                let mut r = bracket(&setup, alpha, &tests)?;
                if let Some(f) = &fine {
                    let d = crate::spectral::bracket_drift(&r, &bracket(f, alpha, &tests)?);
                    r.refinement_drift = Some(d);
                    out.at_most(format!("bracket_drift[alpha={alpha}]"), d, p.max_drift);
                }
                if constant {
                    // per-mode ratio (1 + λ^α)/(1 + λ)^α lies between 1 and 2^{1-α}
                    let modes: Vec<_> = tests
                        .iter()
                        .filter(|t| matches!(t, TestFunction::Mode { .. }))
                        .cloned()
                        .collect();
                    if !modes.is_empty() {
                        let m = bracket(&setup, alpha, &modes)?;
                        let edge = 2f64.powf(1.0 - alpha);
                        out.at_least(
                            format!("mode_ratio_min[alpha={alpha}]"),
                            m.ratio_min,
                            edge.min(1.0) - 1e-9,
                        );
                        out.at_most(
                            format!("mode_ratio_max[alpha={alpha}]"),
                            m.ratio_max,
                            edge.max(1.0) + 1e-9,
                        );
                    }
                }
                reports.push(r);
            }
            out.json("norm_equiv.json", &reports)
        }
        (Task::Extend, TaskParams::Extend(p)) => {
            let u = p.input.sample(&setup.grid);
            let res = resolution(&setup, p.refinements);
            let mut meta = vec![];
            for &alpha in &cfg.alphas() {
                let ext = extend_at(&setup.decomposition, alpha, &u, &res)?;
                let norm = setup.grid.norm(&u);
                out.at_most(
                    format!("sup_y_norm[alpha={alpha}]"),
                    ext.sup_norm_in_y(),
                    norm * (1.0 + 1e-8),
                );
                out.at_most(
                    format!("trace_error[alpha={alpha}]"),
                    ext.trace_error(),
                    ext.trace_tolerance(),
                );
                let name = format!("extension_alpha{}.csv", tag(alpha));
                ext.write_csv(&out.path(&name))?;
                meta.push(serde_json::from_str::<serde_json::Value>(&ext.metadata_json()?)?);
            }
            out.json("extension.json", &meta)
        }
        (Task::Recover, TaskParams::Extend(p)) => {
            let u = p.input.sample(&setup.grid);
            let res = resolution(&setup, p.refinements);
            let mut rows = vec![];
            let mut summary = vec![];
            for &alpha in &cfg.alphas() {
                let ext = extend_at(&setup.decomposition, alpha, &u, &res)?;
                let got = conormal_recover(&ext)?;
                let exact = crate::spectral::fractional_power(&setup.decomposition, alpha, &u)?;
                let err = setup.grid.norm(&(&got - &exact)) / setup.grid.norm(&exact).max(f64::MIN_POSITIVE);
                out.at_most(format!("recovery_error[alpha={alpha}]"), err, RECOVERY_TOL);
                summary.push(serde_json::json!({ "alpha": alpha, "relative_error": err }));
                for i in 0..got.len() {
                    rows.push(vec![
                        Cell::F(alpha),
                        Cell::I(setup.grid.node_of_dof(i)),
                        Cell::F(got[i]),
                        Cell::F(exact[i]),
                    ]);
                }
            }
            out.csv("recover.csv", "alpha,node,recovered,exact", rows)?;
            out.json("recover.json", &summary)
        }
        (Task::Energy, TaskParams::Energy(p)) => {
            let fine = if p.refine {
                Some(problem.refined().build()?)
            } else {
                None
            };
            let mut reports = vec![];
            for &alpha in &cfg.alphas() {
                let run = |s: &Setup| -> Result<_> {
                    let u = p.input.sample(&s.grid);
                    let res = ExtensionResolution::for_spectrum(&s.decomposition);
                    Ok(energy_report(&extend_at(&s.decomposition, alpha, &u, &res)?))
                };
                let coarse = run(&setup)?;
                out.at_most(format!("energy_ratio_finite[alpha={alpha}]"), coarse.ratio, f64::MAX);
                let mut drift = None;
                if let Some(f) = &fine {
                    let fr = run(f)?;
                    let d = (fr.ratio / coarse.ratio).max(coarse.ratio / fr.ratio);
                    out.at_most(format!("energy_ratio_drift[alpha={alpha}]"), d, p.max_drift_factor);
                    drift = Some(d);
                }
                reports.push(serde_json::json!({ "alpha": alpha, "report": coarse, "refinement_factor": drift }));
            }
            out.json("energy.json", &reports)
        }
        (Task::Doubling, TaskParams::Doubling(p)) => {
            let u = p.input.sample(&setup.grid);
            let res = ExtensionResolution::for_spectrum(&setup.decomposition);
            let mut rows = vec![];
            for &alpha in &cfg.alphas() {
                let ext = extend_at(&setup.decomposition, alpha, &u, &res)?;
                let ratios = doubling_ratio(&ext, p.center, &p.radii)?;
                let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
                out.at_most(format!("doubling_bounded[alpha={alpha}]"), worst, f64::MAX);
                out.at_least(
                    format!("doubling_monotone[alpha={alpha}]"),
                    ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
                    1.0,
                );
                rows.extend(
                    ratios
                        .into_iter()
                        .map(|(r, q)| vec![Cell::F(alpha), Cell::F(r), Cell::F(q)]),
                );
            }
            out.csv("doubling.csv", "alpha,R,ratio", rows)
        }
        (Task::Picard, TaskParams::Picard(p)) => {
            let u0 = complex(&p.initial.sample(&setup.grid));
            let q = nonlinearity(&p.nonlinearity, None)?;
            let dec = &setup.decomposition;
            let monitor = SobolevMonitor::new(dec, p.options.norm)?;
            let mut summary = vec![];
            for &alpha in &cfg.alphas() {
                let tr = picard_solve(dec, alpha, &u0, &q, &p.options)?;
                let ratios = tr.contraction_ratios();
                let worst = ratios.iter().cloned().fold(0.0, f64::max);
                let t_star = match p.options.c_est {
                    Some(c) => Some(t_star_from_norm(
                        monitor.norm(p.options.s, &u0)?,
                        q.degrees().0,
                        q.degrees().1,
                        c,
                    )?),
                    None => None,
                };
                if t_star.is_none_or(|t| p.options.t_final <= t) {
                    out.at_most(format!("picard_contraction[alpha={alpha}]"), worst, p.max_contraction);
                }
                let dt = p.options.dt;
                let resid = tr.monitors.iter().map(|m| m.equation_residual).fold(0.0, f64::max);
                let scale = tr.monitors.iter().map(|m| m.sobolev_norm).fold(0.0, f64::max).max(1.0);
                out.at_most(
                    format!("equation_residual[alpha={alpha}]"),
                    resid / scale,
                    10.0 * dt * dt,
                );
                write_trajectory(out, &setup.grid, &tr, &format!("picard_alpha{}", tag(alpha)))?;
                summary.push(serde_json::json!({
                    "alpha": alpha,
                    "t_star": t_star,
                    "picard_residuals": tr.picard_residuals,
                    "contraction_ratios": ratios,
                    "warnings": tr.warnings,
                }));
            }
            out.json("picard.json", &summary)
        }
        (Task::Viscous, TaskParams::Viscous(p)) => {
            let u0 = complex(&p.initial.sample(&setup.grid));
            let q = nonlinearity(&p.nonlinearity(cfg.grid.dim), Some(&setup.grid))?;
            hypothesis(out, &q, &setup.grid, cfg.seed)?;
            let mut summary = vec![];
            for &alpha in &cfg.alphas() {
                let tr = viscous_solve(&setup.decomposition, alpha, p.epsilon, &u0, &q, &p.options)?;
                out.at_most(
                    format!("growth_flags[alpha={alpha}]"),
                    tr.growth_flags.len() as f64,
                    0.0,
                );
                write_trajectory(out, &setup.grid, &tr, &format!("viscous_alpha{}", tag(alpha)))?;
                summary.push(serde_json::json!({
                    "alpha": alpha,
                    "epsilon": p.epsilon,
                    "growth_flags": tr.growth_flags,
                    "max_sobolev_norm": tr.monitors.iter().map(|m| m.sobolev_norm).fold(0.0, f64::max),
                }));
            }
            out.json("viscous.json", &summary)
        }
        (Task::ViscosityConvergence, TaskParams::Viscous(p)) => {
            let u0 = complex(&p.initial.sample(&setup.grid));
            let q = nonlinearity(&p.nonlinearity(cfg.grid.dim), Some(&setup.grid))?;
            hypothesis(out, &q, &setup.grid, cfg.seed)?;
            let mut rows = vec![];
            let mut summary = vec![];
            for &alpha in &cfg.alphas() {
                let vc = viscosity_convergence(&setup.decomposition, alpha, &u0, &q, &p.options, &p.epsilons)?;
                out.at_least(format!("r_squared[alpha={alpha}]"), vc.r_squared, p.min_r_squared);
                rows.extend(
                    vc.rows
                        .iter()
                        .map(|&(a, b, d)| vec![Cell::F(alpha), Cell::F(a), Cell::F(b), Cell::F(d)]),
                );
                summary.push(serde_json::json!({ "alpha": alpha, "k_est": vc.k_est, "r_squared": vc.r_squared }));
            }
            out.csv("viscosity_convergence.csv", "alpha,eps_a,eps_b,sup_diff_h2", rows)?;
            out.json("viscosity_convergence.json", &summary)
        }
        (Task::UcProbe, TaskParams::UcProbe(p)) => {
            let spec = p.spec(cfg.grid.dim).map_err(Error::Config)?;
            let rows = dichotomy_sweep(&setup.decomposition, &spec, &cfg.alphas())?;
            for r in &rows {
                if r.alpha.fract() == 0.0 {
                    out.at_most(format!("local[alpha={}]", r.alpha), r.ratio, 0.0);
                } else {
                    out.at_least(format!("nonlocal[alpha={}]", r.alpha), r.ratio, p.floor);
                }
            }
            write_sweep_csv(&out.path("uc_probe.csv"), &rows)
        }
        (Task::KpCheck, TaskParams::Kp(p)) => {
            let bessel = BesselPotential::new(&setup.grid)?;
            let mut sweeps = vec![];
            for &l in &p.l {
                let s = kato_ponce_sweep(&bessel, l, p.pairs, cfg.seed)?;
                out.at_most(format!("kp_constant[l={l}]"), s.max_ratio, p.max_constant);
                sweeps.push(s);
            }
            out.json("kp_check.json", &sweeps)
        }
        (task, _) => Err(Error::Config(format!(
            "task {} got parameters of another task",
            task.name()
        ))),
    }
}

fn tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p")
}

fn complex(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

fn resolution(setup: &Setup, refinements: usize) -> ExtensionResolution {
    (0..refinements).fold(ExtensionResolution::for_spectrum(&setup.decomposition), |r, _| {
        r.refined()
    })
}

fn bracket(setup: &Setup, alpha: f64, tests: &[TestFunction]) -> Result<NormEquivalenceReport> {
    let bessel = BesselPotential::new(&setup.grid)?;
    let samples = tests
        .iter()
        .map(|t| t.realize(&setup.grid, &setup.decomposition))
        .collect::<Result<Vec<_>>>()?;
    norm_equivalence(&setup.decomposition, &bessel, alpha, &samples)
}

fn nonlinearity(cfg: &NonlinearityConfig, grid: Option<&Grid>) -> Result<Nonlinearity> {
    let terms = cfg.terms.iter().map(TermConfig::term).collect();
    match grid {
        Some(g) => Nonlinearity::gradient(g.dim(), terms, cfg.n1, cfg.n2),
        None => Nonlinearity::polynomial(terms, cfg.n1, cfg.n2),
    }
}

fn hypothesis(out: &mut Outcome, q: &Nonlinearity, grid: &Grid, seed: u64) -> Result<()> {
    let defect = q.energy_hypothesis_defect(grid, 8, seed)?;
    out.at_most("energy_hypothesis_defect", defect, 1e-10);
    Ok(())
}

fn write_trajectory(out: &mut Outcome, grid: &Grid, tr: &Trajectory, stem: &str) -> Result<()> {
    tr.write_states_csv(&out.path(&format!("{stem}_states.csv")), |i| grid.node_of_dof(i))?;
    tr.write_monitors_csv(&out.path(&format!("{stem}_monitors.csv")))
}

fn spectrum(setup: &Setup, hypotheses: bool, out: &mut Outcome) -> Result<()> {
    let dec = &setup.decomposition;
    let check = dec.verify();
    let scale = check.lambda_max.abs().max(f64::MIN_POSITIVE);
    out.at_most("orthonormality", check.orthonormality, 1e-10);
    out.at_most("reconstruction", check.reconstruction, 1e-8 * scale);
    out.at_least("lambda_min", check.lambda_min, -NEGATIVITY_SLACK * scale);
    out.csv(
        "eigenvalues.csv",
        "index,lambda",
        dec.eigenvalues()
            .iter()
            .enumerate()
            .map(|(i, &l)| vec![Cell::I(i), Cell::F(l)]),
    )?;
    let report = serde_json::json!({
        "dof_count": dec.dof_count(),
        "check": check,
        "gershgorin_lower_bound": setup.operator.gershgorin_min(),
        "hypotheses": if hypotheses { Some(check_hypotheses(&setup.field, &setup.grid)) } else { None },
    });
    out.json("spectrum.json", &report)
}

fn funcalc(cfg: &RunConfig, setup: &Setup, p: &super::config::FuncalcParams, out: &mut Outcome) -> Result<()> {
    let dec = &setup.decomposition;
    let grid = &setup.grid;
    let f = p.input.sample(grid);
    let fc = complex(&f);
    let l2 = |v: &DVector<Complex64>| (grid.cell_volume() * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    let mut rows = vec![];
    for &alpha in &cfg.alphas() {
        let g = match p.map {
            MapKind::Power => {
                let g = dec.apply(&ScalarMap::Power(alpha), &fc)?;
                let twice = dec.apply(&ScalarMap::Power(alpha), &g)?;
                let direct = dec.apply(&ScalarMap::Power(2.0 * alpha), &fc)?;
                let err = l2(&(&twice - &direct)) / l2(&direct).max(f64::MIN_POSITIVE);
                out.at_most(format!("composition[alpha={alpha}]"), err, 1e-9);
                g
            }
            MapKind::Heat => {
                let g = dec.apply(&ScalarMap::Heat { t: p.t }, &fc)?;
                out.at_most("heat_contraction", l2(&g), l2(&fc) * (1.0 + 1e-12));
                g
            }
            MapKind::Unitary => {
                let g = dec.apply(&ScalarMap::UnitaryFrac { t: p.t, alpha }, &fc)?;
                let drift = (l2(&g) - l2(&fc)).abs() / l2(&fc).max(f64::MIN_POSITIVE);
                out.at_most(format!("unitarity[alpha={alpha}]"), drift, 1e-10);
                g
            }
            MapKind::Viscous => {
                let g = dec.apply(
                    &ScalarMap::Viscous {
                        eps: p.eps,
                        t: p.t,
                        alpha,
                    },
                    &fc,
                )?;
                let norm = dec.operator_norm(&ScalarMap::ViscousGenerator {
                    eps: p.eps,
                    t: p.t,
                    alpha,
                })?;
                if p.eps > 0.0 && p.t > 0.0 {
                    out.at_most(
                        format!("smoothing[alpha={alpha}]"),
                        norm,
                        smoothing_bound(p.eps, p.t) * (1.0 + 1e-10),
                    );
                }
                g
            }
        };
        for i in 0..g.len() {
            rows.push(vec![
                Cell::F(alpha),
                Cell::I(grid.node_of_dof(i)),
                Cell::F(g[i].re),
                Cell::F(g[i].im),
            ]);
        }
    }
    out.csv("funcalc.csv", "alpha,node,re,im", rows)
}
