//! `fracspec run|validate <config>`: one TOML config describes one task.

pub mod config;
pub mod manifest;
mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use manifest::{Invariant, Manifest, Status, Versions};

const AFTER_HELP: &str = "\
Config (TOML, unknown keys rejected):
  task          spectrum | funcalc | norm_equiv | extend | recover | energy | doubling |
                picard | viscous | viscosity_convergence | uc_probe | kp_check
  alpha         number or list, each >= 0 (extend/recover/energy/doubling need (0,1),
                uc_probe needs (0,1])
  seed          default 0
  output_dir    default \"fracspec-out\"
  [grid]        dim (1|2), n, half_length, boundary (dirichlet|periodic)
  [coefficients] kind = identity | radial_bump | table
                radial_bump: scale (1), width (1), matrix (identity), c_amp (0), c_width (width)
                table: table_path; any kind: c_shift (0)
  [task_params] per task, all optional:
    spectrum     hypotheses = true
    funcalc      map = power|heat|unitary|viscous (power), t = 1, eps = 0.01,
                 input = {amplitude = 1, width = 1, center = [0, 0]}
    norm_equiv   bumps = 8, modes = 4, refine = true, max_drift = 0.1
    extend, recover   input, refinements = 0
    energy       input, refine = true, max_drift_factor = 2
    doubling     input (width 0.5), center = [0, 0], radii = [0.5, 0.25, 0.125]
    picard       initial (amplitude 0.5), nonlinearity = {n1, n2, terms = [{coeff = [re, im], powers}]}
                 (|z|^2 z), max_contraction = 0.5,
                 options = {t_final = 0.1, dt = 1e-3, tol = 1e-12, max_iter = 50, s = 2 (4 in 2D),
                            norm = operator|bessel, output_stride = 1, c_est}
    viscous, viscosity_convergence
                 initial (amplitude 0.2, width 2), nonlinearity (|z|^2 d_1 z), epsilon = 0.05,
                 epsilons = [0.1, 0.05, 0.025, 0.0125], min_r_squared = 0.9,
                 options = {t_final = 0.1, dt = 1e-3, s = 2 (4 in 2D), norm, output_stride = 10,
                            envelope_c = 1, blowup_factor = 10, inner_tol = 1e-13, inner_max = 100}
    uc_probe     theta, f_support = {lo = [..], hi = [..]} (standard spec), floor = 1e-6
    kp_check     l = [0.5, 1, 2], pairs = 20, max_constant = 10

Environment: FRACSPEC_THREADS sets the worker count for parallel sweeps (default: all cores).
Exit codes: 0 success, 1 invariant failure, 2 config error, 3 numerical error.";

#[derive(Debug, Parser)]
#[command(name = "fracspec", version, about = "Fractional powers of elliptic operators on desk-scale grids", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the task and write its data files and manifest.json into output_dir.
    Run { config: PathBuf },
    /// Parse and validate the config, then print it with all defaults filled in.
    Validate { config: PathBuf },
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match RunConfig::from_path(&config) {
            Ok(cfg) => {
                print!("{}", cfg.echo());
                0
            }
            Err(e) => {
                eprintln!("config error: {e}");
                Status::ConfigError.exit_code()
            }
        },
        Command::Run { config } => match RunConfig::from_path(&config) {
            Ok(cfg) => {
                if let Err(e) = configure_threads() {
                    eprintln!("config error: {e}");
                    return Status::ConfigError.exit_code();
                }
                match run(&cfg) {
                    Ok(m) => {
                        report(&m);
                        m.status.exit_code()
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        Status::NumericalError.exit_code()
                    }
                }
            }
            Err(e) => {
                eprintln!("config error: {e}");
                Status::ConfigError.exit_code()
            }
        },
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FRACSPEC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("FRACSPEC_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("FRACSPEC_THREADS must be positive".into());
    }
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn report(m: &Manifest) {
    for inv in &m.invariants {
        let mark = if inv.passed { "ok  " } else { "FAIL" };
        eprintln!(
            "{mark} {} = {:e} ({} {:e})",
            inv.name, inv.value, inv.relation, inv.threshold
        );
    }
    if let Some(e) = &m.error {
        eprintln!("error: {e}");
    }
}

/// Runs the task and writes `manifest.json`; module errors end up in the manifest, only
/// failure to write the output directory is returned.
pub fn run(cfg: &RunConfig) -> crate::Result<Manifest> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let start = Instant::now();
    let mut out = tasks::Outcome::new(dir);
    let result = tasks::run_task(cfg, &mut out);
    let (status, error) = match &result {
        Ok(()) if out.invariants.iter().all(|i| i.passed) => (Status::Ok, None),
        Ok(()) => (Status::InvariantFailure, None),
        Err(e) if e.exit_code() == 2 => (Status::ConfigError, Some(e.to_string())),
        Err(e) => (Status::NumericalError, Some(e.to_string())),
    };
    let mut files = out.files;
    files.push("manifest.json".into());
    let manifest = Manifest {
        task: cfg.task.name().into(),
        seed: cfg.seed,
        config: cfg.echo(),
        versions: Versions::default(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
        error,
        invariants: out.invariants,
        files,
    };
    write_manifest(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn write_manifest(path: &Path, m: &Manifest) -> crate::Result<()> {
    let text = serde_json::to_string_pretty(m)? + "\n";
    std::fs::write(path, text).map_err(|e| crate::Error::io(path, e))
}
