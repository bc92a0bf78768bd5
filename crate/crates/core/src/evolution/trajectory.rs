use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{BesselPotential, SpectralDecomposition};

/// Which operator defines the discrete `H^s` norm used by the monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `‖(1 + L)^{s/2} f‖`, computed in the eigenbasis of the evolution operator.
    #[default]
    Operator,
    /// `‖(1 - Δ_h)^{s/2} f‖`.
    Bessel,
}

/// Discrete Sobolev norms for monitoring; cell-volume weighted when a grid is present.
pub enum SobolevMonitor<'a> {
    Operator(&'a SpectralDecomposition),
    Bessel(BesselPotential),
}

impl<'a> SobolevMonitor<'a> {
    pub fn new(dec: &'a SpectralDecomposition, kind: NormKind) -> Result<Self> {
        match kind {
            NormKind::Operator => Ok(SobolevMonitor::Operator(dec)),
            NormKind::Bessel => Ok(SobolevMonitor::Bessel(BesselPotential::new(dec.require_grid()?)?)),
        }
    }

    pub fn norm(&self, s: f64, f: &DVector<Complex64>) -> Result<f64> {
        match self {
            SobolevMonitor::Bessel(b) => b.sobolev_norm_complex(s, f),
            SobolevMonitor::Operator(dec) => {
                let modes = dec.to_modes_complex(f)?;
                Ok(modal_norm(dec, s, &modes))
            }
        }
    }
}

/// `‖(1 + L)^{s/2} f‖` from modal coefficients.
pub fn modal_norm(dec: &SpectralDecomposition, s: f64, modes: &DVector<Complex64>) -> f64 {
    let acc: f64 = modes
        .iter()
        .enumerate()
        .map(|(i, c)| (1.0 + dec.effective_eigenvalue(i)).powf(s) * c.norm_sqr())
        .sum();
    (cell_volume(dec) * acc).sqrt()
}

pub fn l2_norm(dec: &SpectralDecomposition, f: &DVector<Complex64>) -> f64 {
    (cell_volume(dec) * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

pub(crate) fn cell_volume(dec: &SpectralDecomposition) -> f64 {
    dec.grid().map_or(1.0, |g| g.cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorRow {
    pub time: f64,
    pub l2_norm: f64,
    pub sobolev_norm: f64,
    pub equation_residual: f64,
    /// Picard sweeps for the whole run, or inner iterations of the step that reached this time.
    pub iterations: usize,
    pub epsilon: Option<f64>,
}

/// States `[time, dof]` with per-time monitors.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<Complex64>,
    pub monitors: Vec<MonitorRow>,
    pub sobolev_index: f64,
    /// `sup_t ‖v_{k+1} - v_k‖_{s,2}` per Picard sweep.
    pub picard_residuals: Vec<f64>,
    /// Times at which the growth of `‖L^{s/2}u‖₂` exceeded 10× the energy-estimate bound.
    pub growth_flags: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> DVector<Complex64> {
        self.states.row(k).transpose()
    }

    pub fn last(&self) -> DVector<Complex64> {
        self.state(self.times.len() - 1)
    }

    /// Ratios of successive Picard residuals.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.picard_residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Rows `time,node,re,im`.
    pub fn write_states_csv(&self, path: &Path, node_of_dof: impl Fn(usize) -> usize) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(w, "time,node,re,im").map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            for i in 0..self.states.ncols() {
                let z = self.states[(k, i)];
                writeln!(w, "{:.17e},{},{:.17e},{:.17e}", t, node_of_dof(i), z.re, z.im).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    /// Rows `time,l2,sobolev_s,residual,iterations,epsilon`.
    pub fn write_monitors_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(w, "time,l2,sobolev_s,residual,iterations,epsilon").map_err(io)?;
        for m in &self.monitors {
            let eps = m.epsilon.map_or(String::new(), |e| format!("{e:.17e}"));
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                m.time, m.l2_norm, m.sobolev_norm, m.equation_residual, m.iterations, eps
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// `‖r_j‖₂` for `r = D_t u - F(u)` with centered differences inside and second-order
/// one-sided differences at both ends.
pub(crate) fn time_derivative(states: &[DVector<Complex64>], dt: f64, j: usize) -> DVector<Complex64> {
    let n = states.len();
    if n < 3 {
        return if n == 2 {
            (&states[1] - &states[0]) / Complex64::from(dt)
        } else {
            DVector::zeros(states[0].len())
        };
    }
    let c = |x: f64| Complex64::from(x);
    if j == 0 {
        (&states[0] * c(-3.0) + &states[1] * c(4.0) - &states[2]) / c(2.0 * dt)
    } else if j == n - 1 {
        (&states[n - 1] * c(3.0) - &states[n - 2] * c(4.0) + &states[n - 3]) / c(2.0 * dt)
    } else {
        (&states[j + 1] - &states[j - 1]) / c(2.0 * dt)
    }
}
