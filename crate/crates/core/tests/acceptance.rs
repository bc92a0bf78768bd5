//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracspec::coeff::{CoefficientParams, RadialBump};
use fracspec::evolution::{
    measure_c_est, picard_solve, t_star_from_norm, viscosity_convergence, viscous_solve, Nonlinearity,
    NonlinearityKind, PicardOptions, SobolevMonitor, Term, ViscousOptions,
};
use fracspec::extension::{
    conormal_recover, doubling_ratio, energy_report, extend_at, ConormalConstant, ExtensionField, ExtensionResolution,
};
use fracspec::grid::{Boundary, Grid};
use fracspec::problem::{Problem, Setup};
use fracspec::spectral::{
    fractional_power, norm_equivalence, smoothing_bound, standard_test_set, unitary_propagate, BesselPotential,
    ScalarMap, SpectralDecomposition,
};
use fracspec::ucprobe::{dichotomy_sweep, VanishingSpec, NONLOCALITY_FLOOR};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

const DOUBLING_CONSTANT: f64 = 8.0;

fn bump_field() -> CoefficientParams {
    CoefficientParams::RadialBump(RadialBump::isotropic(1, 1.0, 2.0))
}

fn build(n: usize, x: f64, boundary: Boundary, params: CoefficientParams) -> Setup {
    Problem::new(1, n, x, boundary, params).build().expect("setup")
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn crel(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn c1_functional_calculus() -> Outcome {
    let start = Instant::now();
    let s = build(128, 8.0, Boundary::Dirichlet, CoefficientParams::Identity);
    let n_int = s.grid.dof_count();
    let h = s.grid.spacing();
    let mut worst: f64 = 0.0;
    for (k, &l) in s.decomposition.eigenvalues().iter().enumerate() {
        let exact = 4.0 / (h * h) * ((k + 1) as f64 * PI / (2.0 * (n_int + 1) as f64)).sin().powi(2);
        worst = worst.max((l - exact).abs() / exact);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-8 && secs < 5.0,
        format!("max rel eigenvalue error {worst:.2e}, {secs:.2}s"),
    ))
}

fn c2_composition() -> Outcome {
    let s = build(128, 8.0, Boundary::Dirichlet, bump_field());
    let l = s.decomposition.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = DVector::from_fn(s.grid.dof_count(), |_, _| rng.random_range(-1.0..1.0));
        let direct = l * (l * &f);
        let spectral = fractional_power(&s.decomposition, 2.0, &f).map_err(|e| e.to_string())?;
        worst = worst.max(rel(&direct, &spectral));
    }
    Ok((
        worst <= 1e-9,
        format!("max ‖L(Lf) - L²f‖/‖L²f‖ = {worst:.2e} over 100 f"),
    ))
}

fn c3_unitarity() -> Outcome {
    let s = build(128, 8.0, Boundary::Dirichlet, bump_field());
    let dec = &s.decomposition;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_complex(&mut rng, dec.dof_count());
    let (mut norm_err, mut group_err): (f64, f64) = (0.0, 0.0);
    for alpha in [0.25, 0.5, 0.75] {
        for t in [0.1, 1.0] {
            let ut = unitary_propagate(dec, alpha, t, &f).map_err(|e| e.to_string())?;
            norm_err = norm_err.max((ut.norm() - f.norm()).abs() / f.norm());
            for s2 in [0.1, 1.0] {
                let two = unitary_propagate(dec, alpha, s2, &ut).map_err(|e| e.to_string())?;
                let one = unitary_propagate(dec, alpha, t + s2, &f).map_err(|e| e.to_string())?;
                group_err = group_err.max(crel(&two, &one));
            }
        }
    }
    Ok((
        norm_err <= 1e-10 && group_err <= 1e-10,
        format!("norm drift {norm_err:.2e}, group law {group_err:.2e}"),
    ))
}

fn c4_smoothing() -> Outcome {
    let s = build(128, 8.0, Boundary::Dirichlet, CoefficientParams::Identity);
    let dec = &s.decomposition;
    let (lo, hi) = (dec.lambda_min(), dec.lambda_max());
    let mut ok = true;
    let mut notes = vec![];
    for eps in [0.01, 0.1] {
        for t in [0.1, 1.0] {
            let measured = dec
                .operator_norm(&ScalarMap::ViscousGenerator { eps, t, alpha: 0.5 })
                .map_err(|e| e.to_string())?;
            let bound = smoothing_bound(eps, t);
            ok &= measured <= bound * (1.0 + 1e-10);
            let star = (2.0 * eps * t).powf(-0.5);
            if (lo..=hi).contains(&star) {
                let gap = 1.0 - measured / bound;
                ok &= gap <= 0.02;
                notes.push(format!("{:.1}%", 100.0 * gap));
            }
        }
    }
    Ok((ok, format!("bound holds; gaps at attained λ*: {}", notes.join(", "))))
}

fn c5_norm_equivalence() -> Outcome {
    let start = Instant::now();
    let alphas = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
    let mut ok = true;
    let mut worst_excess: f64 = 0.0;
    for n in [64, 128] {
        let s = build(n, 8.0, Boundary::Periodic, CoefficientParams::Identity);
        let bessel = BesselPotential::new(&s.grid).map_err(|e| e.to_string())?;
        let modes: Vec<_> = (0..s.grid.dof_count())
            .map(|k| s.decomposition.eigenvectors().column(k).into_owned())
            .collect();
        for &alpha in &alphas {
            let r = norm_equivalence(&s.decomposition, &bessel, alpha, &modes).map_err(|e| e.to_string())?;
            let edge: f64 = 2f64.powf(1.0 - alpha);
            let (a, b) = (edge.min(1.0), edge.max(1.0));
            let excess = (a - r.ratio_min).max(r.ratio_max - b).max(0.0);
            worst_excess = worst_excess.max(excess);
            ok &= excess <= 1e-9;
        }
    }
    let tests = standard_test_set(1, 8.0, 5, 8, 4);
    let problem = Problem::new(1, 64, 8.0, Boundary::Dirichlet, bump_field());
    let run = |p: &Problem, alpha: f64| -> Result<_, String> {
        let s = p.build().map_err(|e| e.to_string())?;
        let bessel = BesselPotential::new(&s.grid).map_err(|e| e.to_string())?;
        let samples = tests
            .iter()
            .map(|t| t.realize(&s.grid, &s.decomposition))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        norm_equivalence(&s.decomposition, &bessel, alpha, &samples).map_err(|e| e.to_string())
    };
    let mut worst_drift: f64 = 0.0;
    for &alpha in &alphas {
        let coarse = run(&problem, alpha)?;
        let fine = run(&problem.refined(), alpha)?;
        worst_drift = worst_drift.max(fracspec::spectral::bracket_drift(&coarse, &fine));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= worst_drift <= 0.1 && secs < 120.0;
    Ok((
        ok,
        format!(
            "periodic bracket excess {worst_excess:.1e}, variable drift {:.2}%, {secs:.1}s",
            100.0 * worst_drift
        ),
    ))
}

fn c6_recovery() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut least_gain = f64::INFINITY;
    for params in [CoefficientParams::Identity, bump_field()] {
        let s = build(64, 8.0, Boundary::Dirichlet, params);
        let dec = &s.decomposition;
        let u = s.grid.sample(|x| (-x[0] * x[0]).exp());
        for alpha in [0.25, 0.5, 0.75] {
            let exact = fractional_power(dec, alpha, &u).map_err(|e| e.to_string())?;
            let err = |res: &ExtensionResolution| -> Result<f64, String> {
                let ext = extend_at(dec, alpha, &u, res).map_err(|e| e.to_string())?;
                Ok(rel(&conormal_recover(&ext).map_err(|e| e.to_string())?, &exact))
            };
            let base = ExtensionResolution::for_spectrum(dec);
            let e0 = err(&base)?;
            let e2 = err(&base.refined().refined())?;
            worst = worst.max(e0);
            least_gain = least_gain.min(e0 / e2);
            ok &= e0 <= 1e-3 && e0 / e2 >= 4.0;
        }
    }
    let c_half = ConormalConstant::new(0.5).map_err(|e| e.to_string())?.value;
    ok &= (c_half + 1.0).abs() <= 1e-12;
    Ok((
        ok,
        format!("max error {worst:.2e}, min gain after two doublings {least_gain:.0}x, c*_1/2 = {c_half}"),
    ))
}

fn c7_regularity() -> Outcome {
    let mut ok = true;
    let mut worst_sup = f64::NEG_INFINITY;
    let mut worst_drift: f64 = 1.0;
    for params in [CoefficientParams::Identity, bump_field()] {
        let problem = Problem::new(1, 64, 8.0, Boundary::Dirichlet, params);
        let coarse = problem.build().map_err(|e| e.to_string())?;
        let fine = problem.refined().build().map_err(|e| e.to_string())?;
        for alpha in [0.25, 0.5, 0.75] {
            let mut ratios = vec![];
            for s in [&coarse, &fine] {
                let u = s.grid.sample(|x| (-x[0] * x[0]).exp());
                let res = ExtensionResolution::for_spectrum(&s.decomposition);
                let ext = extend_at(&s.decomposition, alpha, &u, &res).map_err(|e| e.to_string())?;
                let norm = s.grid.norm(&u);
                worst_sup = worst_sup.max(ext.sup_norm_in_y() / norm - 1.0);
                ok &= ext.sup_norm_in_y() <= norm * (1.0 + 1e-8);
                let r = energy_report(&ext).ratio;
                ok &= r.is_finite() && r > 0.0;
                ratios.push(r);
            }
            let drift = (ratios[0] / ratios[1]).max(ratios[1] / ratios[0]);
            worst_drift = worst_drift.max(drift);
            ok &= drift <= 2.0;
        }
    }
    Ok((
        ok,
        format!("sup_y‖U‖/‖u‖ - 1 ≤ {worst_sup:.1e}, energy ratio drift factor {worst_drift:.3}"),
    ))
}

fn c8_picard() -> Outcome {
    // scalar i u' + λ^α u + |u|²u = 0 has u = u₀ exp(i(λ^α + |u₀|²)t)
    let (lam, alpha, z0) = (2.0f64, 0.5, Complex64::new(0.6, 0.3));
    let dec = SpectralDecomposition::from_diagonal(&[lam]).map_err(|e| e.to_string())?;
    let p = Nonlinearity::power_law(Complex64::new(1.0, 0.0), 1);
    let opts = PicardOptions {
        t_final: 0.1,
        dt: 1e-4,
        ..Default::default()
    };
    let tr = picard_solve(&dec, alpha, &DVector::from_element(1, z0), &p, &opts).map_err(|e| e.to_string())?;
    let exact = z0 * Complex64::from_polar(1.0, (lam.powf(alpha) + z0.norm_sqr()) * 0.1);
    let scalar_err = (tr.last()[0] - exact).norm();
    let mut ok = scalar_err <= 1e-6;

    // grid run at T = T*
    let s = build(64, 8.0, Boundary::Dirichlet, CoefficientParams::Identity);
    let dec = &s.decomposition;
    let u0 = s
        .grid
        .sample(|x| 0.5 * (-x[0] * x[0]).exp())
        .map(|v| Complex64::new(v, 0.0));
    let monitor = SobolevMonitor::new(dec, Default::default()).map_err(|e| e.to_string())?;
    let probes: Vec<_> = [0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|a| &u0 * Complex64::new(*a, 0.0))
        .collect();
    let c_est = measure_c_est(&monitor, dec, &p, 2.0, &probes).map_err(|e| e.to_string())?;
    let t_star =
        t_star_from_norm(monitor.norm(2.0, &u0).map_err(|e| e.to_string())?, 3, 3, c_est).map_err(|e| e.to_string())?;
    let dt = 1e-3;
    let opts = PicardOptions {
        t_final: t_star,
        dt: t_star / (t_star / dt).round(),
        c_est: Some(c_est),
        ..Default::default()
    };
    let tr = picard_solve(dec, alpha, &u0, &p, &opts).map_err(|e| e.to_string())?;
    let worst_ratio = tr.contraction_ratios().into_iter().fold(0.0, f64::max);
    let resid = tr.monitors.iter().map(|m| m.equation_residual).fold(0.0, f64::max);
    ok &= worst_ratio <= 0.5 && resid <= 10.0 * opts.dt * opts.dt && tr.warnings.is_empty();
    Ok((
        ok,
        format!(
            "scalar error {scalar_err:.1e}; T*={t_star:.3}: max residual ratio {worst_ratio:.3}, equation residual {resid:.1e} (≤ {:.1e})",
            10.0 * opts.dt * opts.dt
        ),
    ))
}

fn c9_viscous() -> Outcome {
    let s = build(64, 8.0, Boundary::Dirichlet, CoefficientParams::Identity);
    let dec = &s.decomposition;
    let (alpha, eps, t) = (0.5, 0.05, 0.1);
    let u0 = s
        .grid
        .sample(|x| 0.2 * (-x[0] * x[0] / 4.0).exp())
        .map(|v| Complex64::new(v, 0.0));
    let opts = ViscousOptions {
        t_final: t,
        dt: 1e-3,
        output_stride: 10,
        ..Default::default()
    };

    let zero = Nonlinearity::zero(NonlinearityKind::Gradient, 1);
    let tr = viscous_solve(dec, alpha, eps, &u0, &zero, &opts).map_err(|e| e.to_string())?;
    let coeffs = dec.to_modes_complex(&u0).map_err(|e| e.to_string())?;
    let decayed = DVector::from_fn(coeffs.len(), |i, _| {
        let l = dec.effective_eigenvalue(i);
        coeffs[i] * Complex64::new(-eps * l * l * t, l.powf(alpha) * t).exp()
    });
    let linear_err = crel(&tr.last(), &dec.from_modes_complex(&decayed));
    let mut ok = linear_err <= 1e-8;

    let q = Nonlinearity::gradient(1, vec![Term::new(Complex64::new(1.0, 0.0), vec![1, 1, 1, 0])], 3, 3)
        .map_err(|e| e.to_string())?;
    let hyp = q.satisfies_energy_hypothesis(&s.grid).map_err(|e| e.to_string())?;
    let vc =
        viscosity_convergence(dec, alpha, &u0, &q, &opts, &[0.1, 0.05, 0.025, 0.0125]).map_err(|e| e.to_string())?;
    let monitor = SobolevMonitor::new(dec, opts.norm).map_err(|e| e.to_string())?;
    let envelope = 8.0 * opts.envelope_c * monitor.norm(opts.s, &u0).map_err(|e| e.to_string())?;
    let mut peak: f64 = 0.0;
    let mut flags = 0;
    for e in [0.1, 0.05, 0.025, 0.0125] {
        let tr = viscous_solve(dec, alpha, e, &u0, &q, &opts).map_err(|e| e.to_string())?;
        peak = peak.max(tr.monitors.iter().map(|m| m.sobolev_norm).fold(0.0, f64::max));
        flags += tr.growth_flags.len();
    }
    ok &= hyp && vc.r_squared >= 0.9 && peak <= 10.0 * envelope && flags == 0;
    Ok((
        ok,
        format!(
            "Q=0 mode error {linear_err:.1e}; energy hypothesis {hyp}; R² = {:.4}; peak H² norm {peak:.3} vs 10×envelope {:.2}",
            vc.r_squared,
            10.0 * envelope
        ),
    ))
}

fn c10_dichotomy() -> Outcome {
    let start = Instant::now();
    let alphas = [0.25, 0.5, 0.75, 1.0];
    let mut ok = true;
    let mut smallest = f64::INFINITY;
    for params in [CoefficientParams::Identity, bump_field()] {
        let s = build(256, 4.0, Boundary::Dirichlet, params);
        let rows =
            dichotomy_sweep(&s.decomposition, &VanishingSpec::standard(1), &alphas).map_err(|e| e.to_string())?;
        for r in rows {
            if r.alpha == 1.0 {
                ok &= r.ratio == 0.0 && r.mass_on_theta == 0.0;
            } else {
                smallest = smallest.min(r.ratio);
                ok &= r.ratio > NONLOCALITY_FLOOR;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    Ok((
        ok,
        format!("ratio(1) = 0 exactly, smallest fractional ratio {smallest:.2e}, {secs:.1}s"),
    ))
}

fn c11_doubling() -> Outcome {
    let s = build(129, 2.0, Boundary::Dirichlet, CoefficientParams::Identity);
    let u = s.grid.sample(|x| (-x[0] * x[0] / 0.25).exp());
    let radii = [0.5, 0.25, 0.125];
    let mut ok = true;
    let mut observed = vec![];
    for alpha in [0.25, 0.5, 0.75] {
        let res = ExtensionResolution::for_spectrum(&s.decomposition);
        let ext = extend_at(&s.decomposition, alpha, &u, &res).map_err(|e| e.to_string())?;
        let r = doubling_ratio(&ext, [0.0, 0.0], &radii).map_err(|e| e.to_string())?;
        observed.extend(r.iter().map(|p| p.1));
    }
    let largest = observed.iter().cloned().fold(0.0, f64::max);
    // one constant fixed before looking at the data
    let c = DOUBLING_CONSTANT;
    ok &= observed.iter().all(|r| r.is_finite() && *r >= 1.0 && *r <= c) && c <= 10.0 * largest;

    let fine = Grid::new(1, 401, 2.0, Boundary::Dirichlet).map_err(|e| e.to_string())?;
    let h = fine.spacing();
    let ys: Vec<f64> = (0..).map(|k| (k as f64 + 0.5) * h).take_while(|y| *y <= 1.2).collect();
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let ext = ExtensionField::synthetic_constant(&fine, alpha, ys.clone(), 1.0).map_err(|e| e.to_string())?;
        let r = doubling_ratio(&ext, [0.0, 0.0], &[0.5]).map_err(|e| e.to_string())?[0].1;
        let exact = 2f64.powf((1.0 + 2.0 - 2.0 * alpha) / 2.0);
        worst = worst.max((r / exact - 1.0).abs());
    }
    ok &= worst <= 0.01;
    Ok((
        ok,
        format!(
            "bump ratios in [{:.3}, {largest:.3}], C = {c:.3}; constant field off by {:.3}%",
            observed.iter().cloned().fold(f64::INFINITY, f64::min),
            100.0 * worst
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("functional-calculus exactness", c1_functional_calculus),
        ("composition L(Lf) = L^2 f", c2_composition),
        ("unitarity and group law", c3_unitarity),
        ("smoothing bound", c4_smoothing),
        ("norm equivalence brackets", c5_norm_equivalence),
        ("extension recovery", c6_recovery),
        ("extension regularity", c7_regularity),
        ("Picard scheme", c8_picard),
        ("viscosity scheme", c9_viscous),
        ("nonlocality dichotomy", c10_dichotomy),
        ("doubling measurement", c11_doubling),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
