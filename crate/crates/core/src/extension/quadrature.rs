use serde::Serialize;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::spectral::SpectralDecomposition;

/// Trapezoid rule in `ln t` on `[t_min, t_max]` with `intervals` equal steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub t_min: f64,
    pub t_max: f64,
    pub intervals: usize,
}

pub const DEFAULT_INTERVALS: usize = 400;

/// Relative change tolerated between the rule and its half-resolution sibling.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Absolute floor under which differences are not counted as non-convergence.
pub const CONVERGENCE_FLOOR: f64 = 1e-12;

impl QuadratureRule {
    /// Bounds `[1e-8/λ_max, 1e4/max(λ_min, 1e-12)]` with the default node count.
    pub fn for_spectrum(dec: &SpectralDecomposition) -> Self {
        let lmax = dec.lambda_max().max(1e-12);
        let lmin = smallest_positive(dec).max(1e-12);
        QuadratureRule {
            t_min: 1e-8 / lmax,
            t_max: 1e4 / lmin,
            intervals: DEFAULT_INTERVALS,
        }
    }

    pub fn doubled(&self) -> Self {
        QuadratureRule {
            intervals: 2 * self.intervals,
            ..*self
        }
    }

    pub fn step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / self.intervals as f64
    }
}

fn smallest_positive(dec: &SpectralDecomposition) -> f64 {
    (0..dec.dof_count())
        .map(|i| dec.effective_eigenvalue(i))
        .find(|&l| l > 0.0)
        .unwrap_or(1.0)
}

/// `M(λ, y)` and `G(λ, y) = y^{1-2α} ∂_y M(λ, y)` for one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeValues {
    pub m: f64,
    pub g: f64,
    /// Largest relative change against the half-resolution rule.
    pub change: f64,
}

/// Evaluates the extension multiplier
/// `M = y^{2α}/(4^α Γ(α)) ∫ e^{-tλ} e^{-y²/4t} t^{-1-α} dt`
/// and, after integrating by parts in `t`,
/// `G = -2λ/(4^α Γ(α)) ∫ e^{-tλ} e^{-y²/4t} t^{-α} dt`.
/// The part of both integrals below `t_min` is added in closed form.
pub fn mode_values(rule: &QuadratureRule, alpha: f64, lambda: f64, y: f64) -> ModeValues {
    if lambda <= 0.0 {
        return ModeValues {
            m: 1.0,
            g: 0.0,
            change: 0.0,
        };
    }
    let ln_norm = alpha * 4f64.ln() + ln_gamma(alpha);
    let h = rule.step();
    let s0 = rule.t_min.ln();
    let q = y * y / 4.0;
    let two_alpha_ln_y = 2.0 * alpha * y.ln();
    let (mut m_full, mut m_half, mut g_full, mut g_half) = (0.0, 0.0, 0.0, 0.0);
    let n = rule.intervals;
    for j in 0..=n {
        let s = s0 + j as f64 * h;
        let t = s.exp();
        let core = -lambda * t - q / t;
        let em = (two_alpha_ln_y - ln_norm + core - alpha * s).exp();
        let eg = (core + (1.0 - alpha) * s - ln_norm).exp();
        let end = j == 0 || j == n;
        let w = if end { 0.5 } else { 1.0 };
        m_full += w * em;
        g_full += w * eg;
        if j % 2 == 0 {
            let wh = if end || (n % 2 == 1 && j == n - 1) { 0.5 } else { 1.0 };
            m_half += wh * em;
            g_half += wh * eg;
        }
    }
    m_full *= h;
    m_half *= 2.0 * h;
    g_full *= -2.0 * lambda * h;
    g_half *= -4.0 * lambda * h;

    let (m_tail, g_tail) = lower_tail(alpha, lambda, y, rule.t_min, ln_norm);
    let m = m_full + m_tail;
    let g = g_full + g_tail;
    let rel = |a: f64, b: f64, scale: f64| {
        let d = (a - b).abs();
        if d <= CONVERGENCE_FLOOR * scale {
            0.0
        } else {
            d / a.abs().max(f64::MIN_POSITIVE)
        }
    };
    let g_scale = 1.0 + lambda.powf(alpha);
    let change = rel(m_full, m_half, 1.0).max(rel(g_full, g_half, g_scale));
    ModeValues { m, g, change }
}

/// Contributions of `t ∈ (0, t_min)`, with `e^{-tλ}` replaced by 1 there.
fn lower_tail(alpha: f64, lambda: f64, y: f64, t_min: f64, ln_norm: f64) -> (f64, f64) {
    let z = y * y / (4.0 * t_min);
    if z > 700.0 {
        return (0.0, 0.0);
    }
    let q_upper = gamma_ur(alpha, z);
    // Γ(α-1, z) = (Γ(α, z) - z^{α-1} e^{-z}) / (α-1)
    let upper = q_upper * ln_gamma(alpha).exp();
    let upper_shifted = (upper - z.powf(alpha - 1.0) * (-z).exp()) / (alpha - 1.0);
    let g = -2.0 * lambda * (y * y / 4.0).powf(1.0 - alpha) * upper_shifted * (-ln_norm).exp();
    (q_upper, g)
}
