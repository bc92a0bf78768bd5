use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientParams, RadialBump};
use crate::evolution::{NormKind, PicardOptions, Term, ViscousOptions};
use crate::grid::{Boundary, Grid, Point};
use crate::problem::{CoefficientSource, Problem};
use crate::spectral::DEFAULT_DOF_CAP;
use crate::ucprobe::{Region, VanishingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Spectrum,
    Funcalc,
    NormEquiv,
    Extend,
    Recover,
    Energy,
    Doubling,
    Picard,
    Viscous,
    ViscosityConvergence,
    UcProbe,
    KpCheck,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Funcalc => "funcalc",
            Task::NormEquiv => "norm_equiv",
            Task::Extend => "extend",
            Task::Recover => "recover",
            Task::Energy => "energy",
            Task::Doubling => "doubling",
            Task::Picard => "picard",
            Task::Viscous => "viscous",
            Task::ViscosityConvergence => "viscosity_convergence",
            Task::UcProbe => "uc_probe",
            Task::KpCheck => "kp_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKindConfig {
    Identity,
    RadialBump,
    Table,
}

/// `radial_bump` reads `scale`, `width`, `matrix`, `c_amp`, `c_width`; `table` reads `table_path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kind: CoefficientKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_path: Option<PathBuf>,
    #[serde(default)]
    pub c_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl AlphaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaSpec::One(a) => vec![*a],
            AlphaSpec::Many(v) => v.clone(),
        }
    }
}

/// Gaussian `amplitude · exp(-|x - center|² / width²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpConfig {
    pub amplitude: f64,
    pub width: f64,
    pub center: Point,
}

impl Default for BumpConfig {
    fn default() -> Self {
        BumpConfig {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0, 0.0],
        }
    }
}

impl BumpConfig {
    fn validate(&self, key: &str) -> Result<(), String> {
        if !(self.width > 0.0) {
            return Err(format!("{key}.width must be positive"));
        }
        if !self.amplitude.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(format!("{key} must be finite"));
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> nalgebra::DVector<f64> {
        grid.sample(|x| {
            let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
            self.amplitude * (-r2 / (self.width * self.width)).exp()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    /// `[re, im]`
    pub coeff: [f64; 2],
    pub powers: Vec<u32>,
}

impl TermConfig {
    pub fn term(&self) -> Term {
        Term::new(
            num_complex::Complex64::new(self.coeff[0], self.coeff[1]),
            self.powers.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub n1: u32,
    pub n2: u32,
    pub terms: Vec<TermConfig>,
}

impl NonlinearityConfig {
    /// `|z|²z`
    fn cubic() -> Self {
        NonlinearityConfig {
            n1: 3,
            n2: 3,
            terms: vec![TermConfig {
                coeff: [1.0, 0.0],
                powers: vec![2, 1],
            }],
        }
    }

    /// `|z|² ∂_1 z`
    fn cubic_gradient(dim: usize) -> Self {
        let mut powers = vec![1, 1, 1, 0];
        powers.resize(2 + 2 * dim, 0);
        NonlinearityConfig {
            n1: 3,
            n2: 3,
            terms: vec![TermConfig {
                coeff: [1.0, 0.0],
                powers,
            }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Power,
    Heat,
    Unitary,
    Viscous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    /// Also report the structural hypotheses of the coefficient field.
    pub hypotheses: bool,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams { hypotheses: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuncalcParams {
    pub map: MapKind,
    pub t: f64,
    pub eps: f64,
    pub input: BumpConfig,
}

impl Default for FuncalcParams {
    fn default() -> Self {
        FuncalcParams {
            map: MapKind::Power,
            t: 1.0,
            eps: 0.01,
            input: BumpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormEquivParams {
    pub bumps: usize,
    pub modes: usize,
    /// Repeat at doubled `n` and report the bracket drift.
    pub refine: bool,
    pub max_drift: f64,
}

impl Default for NormEquivParams {
    fn default() -> Self {
        NormEquivParams {
            bumps: 8,
            modes: 4,
            refine: true,
            max_drift: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendParams {
    pub input: BumpConfig,
    /// Number of quadrature/ladder refinements applied to the default resolution.
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub input: BumpConfig,
    /// Repeat at doubled `n` and require the energy ratio to move by less than this factor.
    pub refine: bool,
    pub max_drift_factor: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            input: BumpConfig::default(),
            refine: true,
            max_drift_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoublingParams {
    pub input: BumpConfig,
    pub center: Point,
    pub radii: Vec<f64>,
}

impl Default for DoublingParams {
    fn default() -> Self {
        DoublingParams {
            input: BumpConfig {
                amplitude: 1.0,
                width: 0.5,
                center: [0.0, 0.0],
            },
            center: [0.0, 0.0],
            radii: vec![0.5, 0.25, 0.125],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardParams {
    pub initial: BumpConfig,
    pub nonlinearity: NonlinearityConfig,
    pub options: PicardOptions,
    /// Largest allowed ratio of successive Picard residuals.
    pub max_contraction: f64,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams {
            initial: BumpConfig {
                amplitude: 0.5,
                ..BumpConfig::default()
            },
            nonlinearity: NonlinearityConfig::cubic(),
            options: PicardOptions::default(),
            max_contraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscousParams {
    pub initial: BumpConfig,
    /// Defaults to `|z|² ∂_1 z`.
    pub nonlinearity: Option<NonlinearityConfig>,
    /// Used by `viscous`; `viscosity_convergence` uses `epsilons`.
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub options: ViscousOptions,
    pub min_r_squared: f64,
}

impl Default for ViscousParams {
    fn default() -> Self {
        ViscousParams {
            initial: BumpConfig {
                amplitude: 0.2,
                width: 2.0,
                center: [0.0, 0.0],
            },
            nonlinearity: None,
            epsilon: 0.05,
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            options: ViscousOptions {
                output_stride: 10,
                ..ViscousOptions::default()
            },
            min_r_squared: 0.9,
        }
    }
}

impl ViscousParams {
    pub fn nonlinearity(&self, dim: usize) -> NonlinearityConfig {
        self.nonlinearity
            .clone()
            .unwrap_or_else(|| NonlinearityConfig::cubic_gradient(dim))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcProbeParams {
    /// Standard spec for the grid dimension when absent.
    pub theta: Option<Region>,
    pub f_support: Option<Region>,
    pub floor: f64,
}

impl Default for UcProbeParams {
    fn default() -> Self {
        UcProbeParams {
            theta: None,
            f_support: None,
            floor: crate::ucprobe::NONLOCALITY_FLOOR,
        }
    }
}

impl UcProbeParams {
    pub fn spec(&self, dim: usize) -> Result<VanishingSpec, String> {
        let std = VanishingSpec::standard(dim);
        match (self.theta, self.f_support) {
            (None, None) => Ok(std),
            (Some(theta), Some(f_support)) => Ok(VanishingSpec { theta, f_support }),
            _ => Err("task_params: theta and f_support must be given together".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpParams {
    pub l: Vec<f64>,
    pub pairs: usize,
    /// Upper bound on the empirical constant.
    pub max_constant: f64,
}

impl Default for KpParams {
    fn default() -> Self {
        KpParams {
            l: vec![0.5, 1.0, 2.0],
            pairs: 20,
            max_constant: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TaskParams {
    Spectrum(SpectrumParams),
    Funcalc(FuncalcParams),
    NormEquiv(NormEquivParams),
    Extend(ExtendParams),
    Energy(EnergyParams),
    Doubling(DoublingParams),
    Picard(PicardParams),
    Viscous(ViscousParams),
    UcProbe(UcProbeParams),
    Kp(KpParams),
}

/// What the file holds, before task-specific parameters are resolved.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: GridConfig,
    coefficients: CoefficientConfig,
    alpha: AlphaSpec,
    task: Task,
    #[serde(default)]
    task_params: Option<toml::Table>,
    #[serde(default = "default_output")]
    output_dir: PathBuf,
    #[serde(default)]
    seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("fracspec-out")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub coefficients: CoefficientConfig,
    pub alpha: AlphaSpec,
    pub task: Task,
    pub task_params: TaskParams,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn params<T: serde::de::DeserializeOwned + Default>(table: Option<toml::Table>) -> Result<T, String> {
    match table {
        None => Ok(T::default()),
        Some(t) => t
            .try_into()
            .map_err(|e: toml::de::Error| format!("task_params: {}", e.message())),
    }
}

/// The monitor index defaults to the smallest even `s > dim/2` compatible with the
/// nonlinear estimates: 2 in 1D, 4 in 2D.
fn default_monitor_index(table: &mut Option<toml::Table>, dim: usize) {
    if dim < 2 {
        return;
    }
    let t = table.get_or_insert_with(toml::Table::new);
    if let toml::Value::Table(opts) = t
        .entry("options")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
    {
        opts.entry("s").or_insert(toml::Value::Float(4.0));
    }
}

impl FromStr for RunConfig {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())?;
        let mut p = raw.task_params;
        if matches!(raw.task, Task::Picard | Task::Viscous | Task::ViscosityConvergence) {
            default_monitor_index(&mut p, raw.grid.dim);
        }
        let task_params = match raw.task {
            Task::Spectrum => TaskParams::Spectrum(params(p)?),
            Task::Funcalc => TaskParams::Funcalc(params(p)?),
            Task::NormEquiv => TaskParams::NormEquiv(params(p)?),
            Task::Extend | Task::Recover => TaskParams::Extend(params(p)?),
            Task::Energy => TaskParams::Energy(params(p)?),
            Task::Doubling => TaskParams::Doubling(params(p)?),
            Task::Picard => TaskParams::Picard(params(p)?),
            Task::Viscous | Task::ViscosityConvergence => TaskParams::Viscous(params(p)?),
            Task::UcProbe => TaskParams::UcProbe(params(p)?),
            Task::KpCheck => TaskParams::Kp(params(p)?),
        };
        let cfg = RunConfig {
            grid: raw.grid,
            coefficients: raw.coefficients,
            alpha: raw.alpha,
            task: raw.task,
            task_params,
            output_dir: raw.output_dir,
            seed: raw.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Canonical TOML with every default spelled out; parses back to the same config.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.values()
    }

    pub fn problem(&self) -> Problem {
        let g = &self.grid;
        let c = &self.coefficients;
        let coefficients = match c.kind {
            CoefficientKindConfig::Identity => CoefficientSource::Params(CoefficientParams::Identity),
            CoefficientKindConfig::RadialBump => {
                let base = RadialBump::isotropic(g.dim, c.scale.unwrap_or(1.0), c.width.unwrap_or(1.0));
                CoefficientSource::Params(CoefficientParams::RadialBump(RadialBump {
                    matrix: c.matrix.clone().unwrap_or(base.matrix.clone()),
                    c_amp: c.c_amp.unwrap_or(0.0),
                    c_width: c.c_width.unwrap_or(base.width),
                    ..base
                }))
            }
            CoefficientKindConfig::Table => CoefficientSource::Table(c.table_path.clone().unwrap_or_default()),
        };
        Problem {
            dim: g.dim,
            n: g.n,
            half_length: g.half_length,
            boundary: g.boundary,
            coefficients,
            c_shift: c.c_shift,
            dof_cap: DEFAULT_DOF_CAP,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let alphas = self.alphas();
        if alphas.is_empty() {
            return Err("alpha: at least one value required".into());
        }
        for &a in &alphas {
            if !a.is_finite() {
                return Err(format!("alpha must be finite, got {a}"));
            }
            if a < 0.0 {
                return Err(format!("alpha must be ≥ 0, got {a}"));
            }
        }
        let g = &self.grid;
        let grid = Grid::new(g.dim, g.n, g.half_length, g.boundary).map_err(|e| format!("grid: {e}"))?;
        if grid.dof_count() > DEFAULT_DOF_CAP {
            return Err(format!(
                "grid: {} degrees of freedom exceed the dense cap of {DEFAULT_DOF_CAP}",
                grid.dof_count()
            ));
        }
        self.validate_coefficients(&grid)?;
        if !(self.coefficients.c_shift >= 0.0) {
            return Err("coefficients.c_shift must be ≥ 0".into());
        }
        let in_unit = |what: &str| -> Result<(), String> {
            match alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
                Some(a) => Err(format!("alpha: {what} needs alpha in (0, 1), got {a}")),
                None => Ok(()),
            }
        };
        match &self.task_params {
            TaskParams::Spectrum(_) => {}
            TaskParams::Funcalc(p) => {
                p.input.validate("task_params.input")?;
                if !p.t.is_finite() || !(p.eps >= 0.0) {
                    return Err("task_params: t must be finite and eps ≥ 0".into());
                }
                if p.map == MapKind::Heat && !(p.t >= 0.0) {
                    return Err("task_params.t must be ≥ 0 for the heat map".into());
                }
            }
            TaskParams::NormEquiv(p) => {
                if p.bumps + p.modes == 0 {
                    return Err("task_params: bumps + modes must be positive".into());
                }
                if p.modes > grid.dof_count() {
                    return Err(format!("task_params.modes exceeds the {} DOFs", grid.dof_count()));
                }
            }
            TaskParams::Extend(p) => {
                in_unit(self.task.name())?;
                p.input.validate("task_params.input")?;
            }
            TaskParams::Energy(p) => {
                in_unit(self.task.name())?;
                p.input.validate("task_params.input")?;
            }
            TaskParams::Doubling(p) => {
                in_unit(self.task.name())?;
                p.input.validate("task_params.input")?;
                if p.radii.is_empty() || p.radii.iter().any(|r| !(*r > 0.0)) {
                    return Err("task_params.radii must be nonempty and positive".into());
                }
            }
            TaskParams::Picard(p) => {
                p.initial.validate("task_params.initial")?;
                if !(p.max_contraction > 0.0) {
                    return Err("task_params.max_contraction must be positive".into());
                }
                check_time(p.options.t_final, p.options.dt)?;
                p.options.c_est.map_or(Ok(()), |c| {
                    if c > 0.0 {
                        Ok(())
                    } else {
                        Err("task_params.options.c_est must be positive".to_string())
                    }
                })?;
                if p.options.norm == NormKind::Bessel && p.options.s < 0.0 {
                    return Err("task_params.options.s must be ≥ 0".into());
                }
                self.check_nonlinearity(&p.nonlinearity, false)?;
            }
            TaskParams::Viscous(p) => {
                p.initial.validate("task_params.initial")?;
                check_time(p.options.t_final, p.options.dt)?;
                if !(p.epsilon >= 0.0) || p.epsilons.iter().any(|e| !(*e >= 0.0)) {
                    return Err("task_params: epsilons must be ≥ 0".into());
                }
                if self.task == Task::ViscosityConvergence {
                    if p.epsilons.len() < 2 {
                        return Err("task_params.epsilons needs at least two values".into());
                    }
                    if p.epsilons.windows(2).any(|w| w[1] > w[0]) {
                        return Err("task_params.epsilons must be non-increasing".into());
                    }
                }
                self.check_nonlinearity(&p.nonlinearity(g.dim), true)?;
            }
            TaskParams::UcProbe(p) => {
                if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
                    return Err(format!("alpha: uc_probe needs alpha in (0, 1], got {a}"));
                }
                p.spec(g.dim)?
                    .validate(&grid)
                    .map_err(|e| format!("task_params: {e}"))?;
            }
            TaskParams::Kp(p) => {
                if p.l.is_empty() || p.l.iter().any(|l| !(*l > 0.0)) {
                    return Err("task_params.l must be nonempty and positive".into());
                }
                if p.pairs == 0 {
                    return Err("task_params.pairs must be positive".into());
                }
            }
        }
        Ok(())
    }

    fn validate_coefficients(&self, grid: &Grid) -> Result<(), String> {
        let c = &self.coefficients;
        let bump_keys =
            c.scale.is_some() || c.width.is_some() || c.matrix.is_some() || c.c_amp.is_some() || c.c_width.is_some();
        match c.kind {
            CoefficientKindConfig::Identity if bump_keys || c.table_path.is_some() => {
                return Err("coefficients: identity takes no parameters".into())
            }
            CoefficientKindConfig::RadialBump if c.table_path.is_some() => {
                return Err("coefficients.table_path is only valid with kind = \"table\"".into())
            }
            CoefficientKindConfig::Table if bump_keys => {
                return Err("coefficients: table takes only table_path and c_shift".into())
            }
            CoefficientKindConfig::Table if c.table_path.is_none() => {
                return Err("coefficients.table_path is required for kind = \"table\"".into())
            }
            _ => {}
        }
        self.problem()
            .field(grid)
            .map(|_| ())
            .map_err(|e| format!("coefficients: {e}"))
    }

    fn check_nonlinearity(&self, n: &NonlinearityConfig, gradient: bool) -> Result<(), String> {
        let terms = n.terms.iter().map(TermConfig::term).collect();
        let r = if gradient {
            crate::evolution::Nonlinearity::gradient(self.grid.dim, terms, n.n1, n.n2)
        } else {
            crate::evolution::Nonlinearity::polynomial(terms, n.n1, n.n2)
        };
        r.map(|_| ()).map_err(|e| format!("task_params.nonlinearity: {e}"))
    }
}

fn check_time(t_final: f64, dt: f64) -> Result<(), String> {
    if !(t_final > 0.0 && dt > 0.0 && dt <= t_final) {
        return Err(format!(
            "task_params.options: need 0 < dt <= t_final, got dt={dt}, t_final={t_final}"
        ));
    }
    Ok(())
}
