//! Nonlocality of `L^α` against the locality of integer powers: a bump supported away
//! from an open set `Θ` is mapped to something visible on `Θ` exactly when `α` is not an
//! integer.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, Point};
use crate::problem::Problem;
use crate::spectral::{fractional_power, SpectralDecomposition};

/// Relative floor for the mass of `L^α f` on `Θ`; an empirical regression guard.
pub const NONLOCALITY_FLOOR: f64 = 1e-6;

/// Axis-aligned box `lo < x < hi` (only the first `dim` coordinates are used).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Point,
    pub hi: Point,
}

impl Region {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Region {
            lo: [lo, 0.0],
            hi: [hi, 0.0],
        }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Region {
            lo: [lo, lo],
            hi: [hi, hi],
        }
    }

    fn contains(&self, dim: usize, x: &Point, margin: f64) -> bool {
        (0..dim).all(|d| x[d] > self.lo[d] + margin && x[d] < self.hi[d] - margin)
    }

    fn separated_from(&self, other: &Region, dim: usize) -> bool {
        (0..dim).any(|d| self.hi[d] < other.lo[d] || other.hi[d] < self.lo[d])
    }
}

/// `Θ` and the support box of the test bump `(1 - r²)₊⁴`, `r` the box-normalized radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanishingSpec {
    pub theta: Region,
    pub f_support: Region,
}

impl VanishingSpec {
    /// `f` on `[1, 2]^n`, `Θ = (-1, 0)^n`.
    pub fn standard(dim: usize) -> Self {
        if dim == 1 {
            VanishingSpec {
                theta: Region::interval(-1.0, 0.0),
                f_support: Region::interval(1.0, 2.0),
            }
        } else {
            VanishingSpec {
                theta: Region::square(-1.0, 0.0),
                f_support: Region::square(1.0, 2.0),
            }
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let dim = grid.dim();
        let x = grid.half_length();
        for (name, r) in [("theta", &self.theta), ("f_support", &self.f_support)] {
            for d in 0..dim {
                if !(r.lo[d] < r.hi[d]) {
                    return Err(Error::InvalidSpec(format!("{name} is empty along axis {d}")));
                }
                if r.lo[d] < -x || r.hi[d] > x {
                    return Err(Error::InvalidSpec(format!("{name} leaves the box [-{x}, {x}]")));
                }
            }
        }
        if !self.theta.separated_from(&self.f_support, dim) {
            return Err(Error::InvalidSpec(
                "theta must be disjoint from the bump support".into(),
            ));
        }
        Ok(())
    }

    /// The bump sampled at the DOFs; it vanishes identically on `Θ`.
    pub fn bump(&self, grid: &Grid) -> DVector<f64> {
        let dim = grid.dim();
        let s = &self.f_support;
        grid.sample(|x| {
            let r2: f64 = (0..dim)
                .map(|d| {
                    let mid = 0.5 * (s.lo[d] + s.hi[d]);
                    let half = 0.5 * (s.hi[d] - s.lo[d]);
                    ((x[d] - mid) / half).powi(2)
                })
                .sum();
            if r2 < 1.0 {
                (1.0 - r2).powi(4)
            } else {
                0.0
            }
        })
    }

    /// DOFs strictly inside `Θ` shrunk by `shrink` grid spacings.
    pub fn theta_dofs(&self, grid: &Grid, shrink: usize) -> Vec<usize> {
        let margin = shrink as f64 * grid.spacing();
        (0..grid.dof_count())
            .filter(|&i| self.theta.contains(grid.dim(), &grid.dof_position(i), margin))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub alpha: f64,
    pub mass_on_theta: f64,
    pub mass_total: f64,
    pub ratio: f64,
}

fn masses(grid: &Grid, g: &DVector<f64>, theta: &[usize], alpha: f64) -> ProbeResult {
    let vol = grid.cell_volume();
    let on: f64 = theta.iter().map(|&i| g[i] * g[i]).sum::<f64>();
    let mass_on_theta = (vol * on).sqrt();
    let mass_total = grid.norm(g);
    ProbeResult {
        alpha,
        mass_on_theta,
        mass_total,
        ratio: if mass_total > 0.0 {
            mass_on_theta / mass_total
        } else {
            0.0
        },
    }
}

fn theta_or_err(spec: &VanishingSpec, grid: &Grid, shrink: usize) -> Result<Vec<usize>> {
    let dofs = spec.theta_dofs(grid, shrink);
    if dofs.is_empty() {
        return Err(Error::InvalidSpec(format!(
            "theta holds no grid nodes after shrinking by {shrink} spacings"
        )));
    }
    Ok(dofs)
}

/// `L^α f` restricted to `Θ` shrunk by `shrink` spacings. Integer `α` uses repeated
/// matrix products so that the discrete stencil locality is exact.
pub fn probe(dec: &SpectralDecomposition, alpha: f64, spec: &VanishingSpec, shrink: usize) -> Result<ProbeResult> {
    let grid = dec.require_grid()?;
    spec.validate(grid)?;
    let theta = theta_or_err(spec, grid, shrink)?;
    let f = spec.bump(grid);
    let g = if alpha >= 1.0 && alpha.fract() == 0.0 {
        matrix_power(dec, alpha as usize, &f)
    } else {
        fractional_power(dec, alpha, &f)?
    };
    Ok(masses(grid, &g, &theta, alpha))
}

fn matrix_power(dec: &SpectralDecomposition, m: usize, f: &DVector<f64>) -> DVector<f64> {
    let mut g = f.clone();
    for _ in 0..m {
        g = dec.matrix() * g;
    }
    g
}

/// `‖L^α f‖` on `Θ` for `α ∈ (0, 1)`.
pub fn nonlocality_probe(dec: &SpectralDecomposition, alpha: f64, spec: &VanishingSpec) -> Result<ProbeResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "nonlocality probe needs alpha in (0, 1), got {alpha}"
        )));
    }
    probe(dec, alpha, spec, 0)
}

/// `‖L^m f‖` on `Θ` shrunk by `m` spacings, `m ∈ {1, 2}`; zero by stencil locality.
pub fn locality_contrast(dec: &SpectralDecomposition, m: usize, spec: &VanishingSpec) -> Result<ProbeResult> {
    if !(1..=2).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "locality contrast takes m in {{1, 2}}, got {m}"
        )));
    }
    probe(dec, m as f64, spec, m)
}

/// Probe every `α` on the same `Θ`, shrunk by the largest integer `α` present (at least 1).
pub fn dichotomy_sweep(dec: &SpectralDecomposition, spec: &VanishingSpec, alphas: &[f64]) -> Result<Vec<ProbeResult>> {
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "sweep alphas must lie in (0, 1], got {a}"
        )));
    }
    let shrink = alphas
        .iter()
        .filter(|a| a.fract() == 0.0)
        .map(|&a| a as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    alphas.par_iter().map(|&a| probe(dec, a, spec, shrink)).collect()
}

/// Relative change of the `Θ`-ratio when the box is doubled at fixed spacing.
pub fn boundary_sensitivity(problem: &Problem, alpha: f64, spec: &VanishingSpec) -> Result<f64> {
    let coarse = probe(&problem.build()?.decomposition, alpha, spec, 1)?;
    let n = match problem.boundary {
        Boundary::Dirichlet => 2 * problem.n - 1,
        Boundary::Periodic => 2 * problem.n,
    };
    let wide = Problem {
        n,
        half_length: 2.0 * problem.half_length,
        ..problem.clone()
    };
    let fine = probe(&wide.build()?.decomposition, alpha, spec, 1)?;
    Ok((fine.ratio - coarse.ratio).abs() / coarse.ratio.max(f64::MIN_POSITIVE))
}

/// Rows `alpha,mass_theta,mass_total,ratio`.
pub fn write_sweep_csv(path: &Path, rows: &[ProbeResult]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "alpha,mass_theta,mass_total,ratio").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            r.alpha, r.mass_on_theta, r.mass_total, r.ratio
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
