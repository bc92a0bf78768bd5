use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nonlinearity::Nonlinearity;
use super::picard::{modal_l2, modal_or_monitor, pow, step_count};
use super::trajectory::{l2_norm, modal_norm, time_derivative, MonitorRow, NormKind, SobolevMonitor, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscousOptions {
    pub t_final: f64,
    pub dt: f64,
    pub s: f64,
    pub norm: NormKind,
    pub output_stride: usize,
    /// `c` in the envelope `8c‖u₀‖_{s,2}` and in the growth bound `c(‖u‖² + ‖u‖^{N2})`.
    pub envelope_c: f64,
    /// Blow-up is declared once `‖u‖_{s,2}` exceeds the envelope by this factor.
    pub blowup_factor: f64,
    pub inner_tol: f64,
    pub inner_max: usize,
}

impl Default for ViscousOptions {
    fn default() -> Self {
        ViscousOptions {
            t_final: 0.1,
            dt: 1e-3,
            s: 2.0,
            norm: NormKind::Operator,
            output_stride: 1,
            envelope_c: 1.0,
            blowup_factor: 10.0,
            inner_tol: 1e-13,
            inner_max: 100,
        }
    }
}

/// Steps `u(t) = U(t)u₀ + ∫₀ᵗ U(t-t') Q(u)(t') dt'` with `U(t) = e^{t(-εL² + iL^α)}`:
/// exponential trapezoid per step, the implicit end point resolved by fixed-point iteration.
pub fn viscous_solve(
    dec: &SpectralDecomposition,
    alpha: f64,
    eps: f64,
    u0: &DVector<Complex64>,
    q: &Nonlinearity,
    opts: &ViscousOptions,
) -> Result<Trajectory> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {eps}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let steps = step_count(opts.t_final, opts.dt)?;
    let dt = opts.t_final / steps as f64;
    let monitor = SobolevMonitor::new(dec, opts.norm)?;
    let n = dec.dof_count();
    let lam: Vec<f64> = (0..n).map(|i| dec.effective_eigenvalue(i)).collect();
    let lam_a: Vec<f64> = lam.iter().map(|&l| pow(l, alpha)).collect();
    let prop: Vec<Complex64> = lam
        .iter()
        .zip(&lam_a)
        .map(|(&l, &la)| Complex64::from_polar((-eps * dt * l * l).exp(), dt * la))
        .collect();
    let half = Complex64::from(0.5 * dt);
    let (_, n2) = q.degrees();
    let c = opts.envelope_c;
    let s = opts.s;
    let energy = |m: &DVector<Complex64>| -> f64 {
        let acc: f64 = m.iter().zip(&lam).map(|(z, &l)| pow(l, s) * z.norm_sqr()).sum();
        (super::trajectory::cell_volume(dec) * acc).sqrt()
    };
    let q_modes = |m: &DVector<Complex64>| -> Result<DVector<Complex64>> {
        if q.is_zero() {
            return Ok(DVector::zeros(n));
        }
        dec.to_modes_complex(&q.eval(dec.grid(), &dec.from_modes_complex(m))?)
    };

    let mut u_hat = vec![dec.to_modes_complex(u0)?];
    let mut q_hat = vec![q_modes(&u_hat[0])?];
    let mut inner = vec![0usize];
    let norm0 = modal_or_monitor(&monitor, dec, s, &u_hat[0])?;
    let envelope = 8.0 * c * norm0;
    let mut growth_flags = vec![];
    let mut e_prev = energy(&u_hat[0]);
    for j in 1..=steps {
        let prev = &u_hat[j - 1];
        let base = DVector::from_fn(n, |i, _| prop[i] * (prev[i] + half * q_hat[j - 1][i]));
        let mut q_new = q_hat[j - 1].clone();
        let mut w = &base + &q_new * half;
        let mut its = 0;
        if !q.is_zero() {
            loop {
                its += 1;
                q_new = q_modes(&w)?;
                let w_next = &base + &q_new * half;
                let change = modal_l2(dec, &(&w_next - &w));
                let size = modal_l2(dec, &w_next);
                w = w_next;
                if change <= opts.inner_tol * size.max(1e-300) {
                    break;
                }
                if its >= opts.inner_max || !change.is_finite() {
                    return Err(Error::StepNotConverged { time: j as f64 * dt });
                }
            }
        }
        let t = j as f64 * dt;
        let norm_s = modal_or_monitor(&monitor, dec, s, &w)?;
        if !norm_s.is_finite() || (norm0 > 0.0 && norm_s > opts.blowup_factor * envelope) {
            return Err(Error::BlowUp {
                time: t,
                norm: norm_s,
                envelope,
            });
        }
        let e = energy(&w);
        let bound = c * (norm_s.powi(2) + norm_s.powi(n2 as i32));
        if (e - e_prev) / dt > 10.0 * bound && e > e_prev {
            growth_flags.push(t);
        }
        e_prev = e;
        u_hat.push(w);
        q_hat.push(q_new);
        inner.push(its);
    }

    let mut times = vec![];
    let mut rows = vec![];
    let mut monitors = vec![];
    let stride = opts.output_stride.max(1);
    for j in (0..=steps).filter(|j| j % stride == 0 || *j == steps) {
        let dtu = time_derivative(&u_hat, dt, j);
        let r = DVector::from_fn(n, |i, _| {
            dtu[i] - Complex64::new(-eps * lam[i] * lam[i], lam_a[i]) * u_hat[j][i] - q_hat[j][i]
        });
        let state = dec.from_modes_complex(&u_hat[j]);
        let t = j as f64 * dt;
        times.push(t);
        monitors.push(MonitorRow {
            time: t,
            l2_norm: l2_norm(dec, &state),
            sobolev_norm: modal_or_monitor(&monitor, dec, s, &u_hat[j])?,
            equation_residual: modal_l2(dec, &r),
            iterations: inner[j],
            epsilon: Some(eps),
        });
        rows.push(state.transpose());
    }
    Ok(Trajectory {
        times,
        states: DMatrix::from_rows(&rows),
        monitors,
        sobolev_index: s,
        picard_residuals: vec![],
        growth_flags,
        warnings: vec![],
    })
}

/// `sup_t ‖u^ε - u^{ε'}‖_{2,2}` for every pair, and a line through the origin fitted to
/// the differences against `|ε - ε'|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViscosityConvergence {
    pub rows: Vec<(f64, f64, f64)>,
    pub k_est: f64,
    pub r_squared: f64,
}

pub fn viscosity_convergence(
    dec: &SpectralDecomposition,
    alpha: f64,
    u0: &DVector<Complex64>,
    q: &Nonlinearity,
    opts: &ViscousOptions,
    epsilons: &[f64],
) -> Result<ViscosityConvergence> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidArgument("need at least two epsilons".into()));
    }
    if epsilons.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("epsilons must be non-increasing".into()));
    }
    let runs: Vec<Trajectory> = epsilons
        .par_iter()
        .map(|&e| viscous_solve(dec, alpha, e, u0, q, opts))
        .collect::<Result<_>>()?;
    let monitor = SobolevMonitor::new(dec, opts.norm)?;
    let mut rows = vec![];
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            let mut sup: f64 = 0.0;
            for k in 0..runs[a].times.len() {
                let d = runs[a].state(k) - runs[b].state(k);
                let m = dec.to_modes_complex(&d)?;
                sup = sup.max(match monitor {
                    SobolevMonitor::Operator(_) => modal_norm(dec, 2.0, &m),
                    SobolevMonitor::Bessel(_) => monitor.norm(2.0, &d)?,
                });
            }
            rows.push((epsilons[a], epsilons[b], sup));
        }
    }
    let (k_est, r_squared) = fit_through_origin(rows.iter().map(|&(a, b, d)| ((a - b).abs(), d)));
    Ok(ViscosityConvergence { rows, k_est, r_squared })
}

/// Slope `Σxy/Σx²` and the centered coefficient of determination of `y ≈ Kx`.
pub fn fit_through_origin(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.collect();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let k = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len().max(1) as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - k * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (k, r2)
}
