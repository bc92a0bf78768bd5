use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nonlinearity::{Nonlinearity, NonlinearityKind};
use super::trajectory::{l2_norm, modal_norm, time_derivative, MonitorRow, NormKind, SobolevMonitor, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

/// `T* = 1 / (8c (R^{N1-1} + R^{N2-1}))` with `R = 8c‖u₀‖_{s,2}`; `+∞` for `u₀ = 0`.
pub fn t_star_from_norm(norm_s: f64, n1: u32, n2: u32, c_est: f64) -> Result<f64> {
    if !(c_est > 0.0) {
        return Err(Error::InvalidArgument(format!("c_est must be positive, got {c_est}")));
    }
    if norm_s == 0.0 {
        return Ok(f64::INFINITY);
    }
    let r = 8.0 * c_est * norm_s;
    Ok(1.0 / (8.0 * c_est * (r.powi(n1 as i32 - 1) + r.powi(n2 as i32 - 1))))
}

pub fn estimate_t_star(
    monitor: &SobolevMonitor,
    u0: &DVector<Complex64>,
    s: f64,
    n1: u32,
    n2: u32,
    c_est: f64,
) -> Result<f64> {
    t_star_from_norm(monitor.norm(s, u0)?, n1, n2, c_est)
}

/// `max ‖P(f)‖_{s,2} / (‖f‖^{N1}_{s,2} + ‖f‖^{N2}_{s,2})` over the probes.
pub fn measure_c_est(
    monitor: &SobolevMonitor,
    dec: &SpectralDecomposition,
    p: &Nonlinearity,
    s: f64,
    probes: &[DVector<Complex64>],
) -> Result<f64> {
    let (n1, n2) = p.degrees();
    let mut c: f64 = 0.0;
    for f in probes {
        let nf = monitor.norm(s, f)?;
        if nf == 0.0 {
            continue;
        }
        let pf = p.eval(dec.grid(), f)?;
        c = c.max(monitor.norm(s, &pf)? / (nf.powi(n1 as i32) + nf.powi(n2 as i32)));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Stop once `sup_t ‖v_{k+1} - v_k‖_{s,2} ≤ tol · max(1, sup_t ‖v_k‖_{s,2})`.
    pub tol: f64,
    pub max_iter: usize,
    pub s: f64,
    pub norm: NormKind,
    pub output_stride: usize,
    /// If set, a warning is recorded when `t_final` exceeds the resulting `T*`.
    pub c_est: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            t_final: 0.1,
            dt: 1e-3,
            tol: 1e-12,
            max_iter: 50,
            s: 2.0,
            norm: NormKind::Operator,
            output_stride: 1,
            c_est: None,
        }
    }
}

pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0 && dt > 0.0 && dt <= t_final) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= T, got dt={dt}, T={t_final}"
        )));
    }
    Ok((t_final / dt).round().max(1.0) as usize)
}

fn to_physical(dec: &SpectralDecomposition, modes: &[DVector<Complex64>]) -> Vec<DVector<Complex64>> {
    modes.iter().map(|m| dec.from_modes_complex(m)).collect()
}

/// Fixed-point iteration of `Ψ(v)(t) = e^{itL^α}u₀ + i∫₀ᵗ e^{i(t-t')L^α} P(v(t')) dt'`
/// over the whole time grid, the integral by the composite trapezoid rule in the
/// eigenbasis.
pub fn picard_solve(
    dec: &SpectralDecomposition,
    alpha: f64,
    u0: &DVector<Complex64>,
    p: &Nonlinearity,
    opts: &PicardOptions,
) -> Result<Trajectory> {
    if p.kind() != NonlinearityKind::Polynomial {
        return Err(Error::InvalidNonlinearity(
            "the Picard scheme takes a polynomial P(z, z̄)".into(),
        ));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let steps = step_count(opts.t_final, opts.dt)?;
    let dt = opts.t_final / steps as f64;
    let monitor = SobolevMonitor::new(dec, opts.norm)?;
    let n = dec.dof_count();
    let lam_a: Vec<f64> = (0..n).map(|i| pow(dec.effective_eigenvalue(i), alpha)).collect();
    let step_phase: Vec<Complex64> = lam_a.iter().map(|&l| Complex64::from_polar(1.0, dt * l)).collect();
    let u0_hat = dec.to_modes_complex(u0)?;
    let free: Vec<DVector<Complex64>> = (0..=steps)
        .map(|j| {
            let t = j as f64 * dt;
            DVector::from_fn(n, |i, _| u0_hat[i] * Complex64::from_polar(1.0, t * lam_a[i]))
        })
        .collect();

    let mut warnings = vec![];
    if let Some(c) = opts.c_est {
        let (n1, n2) = p.degrees();
        let t_star = estimate_t_star(&monitor, u0, opts.s, n1, n2, c)?;
        if opts.t_final > t_star {
            warnings.push(format!("T = {} exceeds T* = {t_star:e}", opts.t_final));
        }
    }

    let mut v_hat = free.clone();
    let mut v = to_physical(dec, &v_hat);
    let mut history = vec![];
    let half = Complex64::from(0.5 * dt);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut converged = p.is_zero();
    let mut sweeps = 0;
    while !converged {
        if sweeps == opts.max_iter {
            return Err(Error::PicardNotConverged { history });
        }
        sweeps += 1;
        let g_hat: Vec<DVector<Complex64>> = v
            .iter()
            .map(|vj| dec.to_modes_complex(&p.eval(dec.grid(), vj)?))
            .collect::<Result<_>>()?;
        let mut integral = DVector::<Complex64>::zeros(n);
        let mut next = Vec::with_capacity(steps + 1);
        next.push(free[0].clone());
        for j in 1..=steps {
            for i in 0..n {
                integral[i] = step_phase[i] * (integral[i] + half * g_hat[j - 1][i]) + half * g_hat[j][i];
            }
            next.push(&free[j] + &integral * i_unit);
        }
        let mut diff: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (a, b) in next.iter().zip(&v_hat) {
            diff = diff.max(modal_or_monitor(&monitor, dec, opts.s, &(a - b))?);
            size = size.max(modal_or_monitor(&monitor, dec, opts.s, a)?);
        }
        history.push(diff);
        v_hat = next;
        v = to_physical(dec, &v_hat);
        converged = diff <= opts.tol * size.max(1.0);
    }

    // i D_t u + L^α u + P(u) in the eigenbasis
    let p_hat: Vec<DVector<Complex64>> = v
        .iter()
        .map(|vj| dec.to_modes_complex(&p.eval(dec.grid(), vj)?))
        .collect::<Result<_>>()?;
    let mut times = vec![];
    let mut rows = vec![];
    let mut monitors = vec![];
    let stride = opts.output_stride.max(1);
    for j in (0..=steps).filter(|j| j % stride == 0 || *j == steps) {
        let dtu = time_derivative(&v_hat, dt, j);
        let r = DVector::from_fn(n, |i, _| i_unit * dtu[i] + lam_a[i] * v_hat[j][i] + p_hat[j][i]);
        let t = j as f64 * dt;
        times.push(t);
        monitors.push(MonitorRow {
            time: t,
            l2_norm: l2_norm(dec, &v[j]),
            sobolev_norm: modal_or_monitor(&monitor, dec, opts.s, &v_hat[j])?,
            equation_residual: modal_l2(dec, &r),
            iterations: sweeps,
            epsilon: None,
        });
        rows.push(v[j].transpose());
    }
    Ok(Trajectory {
        times,
        states: DMatrix::from_rows(&rows),
        monitors,
        sobolev_index: opts.s,
        picard_residuals: history,
        growth_flags: vec![],
        warnings,
    })
}

/// `‖·‖_{s,2}` of a state given by its modal coefficients.
pub(crate) fn modal_or_monitor(
    monitor: &SobolevMonitor,
    dec: &SpectralDecomposition,
    s: f64,
    modes: &DVector<Complex64>,
) -> Result<f64> {
    match monitor {
        SobolevMonitor::Operator(_) => Ok(modal_norm(dec, s, modes)),
        SobolevMonitor::Bessel(_) => monitor.norm(s, &dec.from_modes_complex(modes)),
    }
}

pub(crate) fn modal_l2(dec: &SpectralDecomposition, modes: &DVector<Complex64>) -> f64 {
    modal_norm(dec, 0.0, modes)
}

pub(crate) fn pow(l: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        l.powf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_star_examples() {
        // R = 8c‖u₀‖ = 1
        assert!((t_star_from_norm(0.125, 3, 3, 1.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let a = t_star_from_norm(0.3, 3, 3, 1.0).unwrap();
        let b = t_star_from_norm(0.6, 3, 3, 1.0).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert_eq!(t_star_from_norm(0.0, 3, 5, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn scalar_cubic_oracle() {
        let lam: f64 = 2.0;
        let alpha = 0.5;
        let dec = SpectralDecomposition::from_diagonal(&[lam]).unwrap();
        let z0 = Complex64::new(0.6, 0.3);
        let u0 = DVector::from_element(1, z0);
        let p = Nonlinearity::power_law(Complex64::new(1.0, 0.0), 1);
        let opts = PicardOptions {
            t_final: 0.1,
            dt: 1e-4,
            ..Default::default()
        };
        let tr = picard_solve(&dec, alpha, &u0, &p, &opts).unwrap();
        let t: f64 = 0.1;
        let exact = z0 * Complex64::from_polar(1.0, (lam.powf(alpha) + z0.norm_sqr()) * t);
        assert!((tr.last()[0] - exact).norm() < 1e-6);
    }
}
