use nalgebra::DVector;
use serde::Serialize;

use super::field::ExtensionField;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, Point};

/// Weighted energy of an extension against `‖u‖² + ‖L^α u‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    /// `∫ y^{1-2α} ‖∂_y U‖²`
    pub y_part: f64,
    /// `∫ y^{1-2α} ‖∇_x U‖²`
    pub x_part: f64,
    pub base_norm_sq: f64,
    pub power_norm_sq: f64,
    pub ratio: f64,
}

fn inner(grid: &Grid, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    grid.cell_volume() * a.dot(b)
}

/// `Σ_faces h^n ((V_{i+1} - V_i)/h)²` with zero boundary values on Dirichlet grids.
pub fn gradient_energy(grid: &Grid, v: &DVector<f64>) -> f64 {
    let nodes = grid.to_nodes(v.as_slice());
    let h = grid.spacing();
    let mut acc = 0.0;
    for node in 0..grid.node_count() {
        for axis in 0..grid.dim() {
            if let Some(next) = grid.neighbor(node, axis, 1) {
                let d = nodes[next] - nodes[node];
                acc += d * d;
            }
        }
    }
    grid.cell_volume() * acc / (h * h)
}

/// `y^{1-2α} ∂_y U` on every ladder node by nonuniform three-point differences.
pub fn conormal_from_values(ext: &ExtensionField) -> Vec<DVector<f64>> {
    let y = ext.y_nodes();
    let w = ext.alpha();
    derivative_in_y(ext)
        .into_iter()
        .zip(y)
        .map(|(d, &yk)| d * yk.powf(1.0 - 2.0 * w))
        .collect()
}

fn derivative_in_y(ext: &ExtensionField) -> Vec<DVector<f64>> {
    let y = ext.y_nodes();
    let n = y.len();
    let col = |k: usize| ext.slice(k);
    if n == 1 {
        return vec![DVector::zeros(ext.values().nrows())];
    }
    (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                let (a, b) = if k == 0 { (0, 1) } else { (n - 2, n - 1) };
                (col(b) - col(a)) / (y[b] - y[a])
            } else {
                let h1 = y[k] - y[k - 1];
                let h2 = y[k + 1] - y[k];
                col(k - 1) * (-h2 / (h1 * (h1 + h2)))
                    + col(k) * ((h2 - h1) / (h1 * h2))
                    + col(k + 1) * (h1 / (h2 * (h1 + h2)))
            }
        })
        .collect()
}

/// Integrates `f(y)` given at geometric-ish nodes by the trapezoid rule in `ln y`.
fn log_trapezoid(y: &[f64], f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..y.len() {
        let ds = (y[k] / y[k - 1]).ln();
        acc += 0.5 * ds * (f[k] * y[k] + f[k - 1] * y[k - 1]);
    }
    acc
}

fn trapezoid(y: &[f64], f: &[f64]) -> f64 {
    (1..y.len()).map(|k| 0.5 * (y[k] - y[k - 1]) * (f[k] + f[k - 1])).sum()
}

/// `∫₀^∞ y^{1-2α}(‖∂_y U‖² + ‖∇_x U‖²) dy`: trapezoid in `ln y` over the ladder, and the
/// piece below the first node integrated with the first-node values frozen.
pub fn energy_report(ext: &ExtensionField) -> EnergyReport {
    let grid = ext.grid();
    let a = ext.alpha();
    let y = ext.y_nodes();
    let g: Vec<DVector<f64>> = match ext.conormal() {
        Some(m) => (0..y.len()).map(|k| m.column(k).into_owned()).collect(),
        None => conormal_from_values(ext),
    };
    let gy: Vec<f64> = g.iter().map(|v| inner(grid, v, v)).collect();
    let gx: Vec<f64> = (0..y.len()).map(|k| gradient_energy(grid, &ext.slice(k))).collect();

    let fy: Vec<f64> = y.iter().zip(&gy).map(|(&yk, &v)| yk.powf(2.0 * a - 1.0) * v).collect();
    let fx: Vec<f64> = y.iter().zip(&gx).map(|(&yk, &v)| yk.powf(1.0 - 2.0 * a) * v).collect();
    let y0 = y[0];
    let y_part = gy[0] * y0.powf(2.0 * a) / (2.0 * a) + log_trapezoid(y, &fy);
    let x_part = gx[0] * y0.powf(2.0 - 2.0 * a) / (2.0 - 2.0 * a) + log_trapezoid(y, &fx);
    let energy = y_part + x_part;
    let base_norm_sq = inner(grid, ext.base(), ext.base());
    let power_norm_sq = ext.base_power().map_or(0.0, |p| inner(grid, p, p));
    let denom = base_norm_sq + power_norm_sq;
    EnergyReport {
        energy,
        y_part,
        x_part,
        base_norm_sq,
        power_norm_sq,
        ratio: if denom > 0.0 { energy / denom } else { 0.0 },
    }
}

/// Cell edges in `y`: `0`, midpoints, and a mirrored last edge.
fn y_cell_edges(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(0.0);
    for k in 1..n {
        e.push(0.5 * (y[k - 1] + y[k]));
    }
    let last = if n > 1 {
        y[n - 1] + 0.5 * (y[n - 1] - y[n - 2])
    } else {
        2.0 * y[0]
    };
    e.push(last);
    e
}

/// `‖y^{(1-2α)/2} U‖` on the half-ball of radius `r` about `(center, 0)`: a cell counts iff
/// its sample point lies inside, and its weight is `h^n ∫ y^{1-2α} dy` over the cell.
pub fn half_ball_mass(ext: &ExtensionField, center: Point, r: f64) -> f64 {
    let grid = ext.grid();
    let a = ext.alpha();
    let y = ext.y_nodes();
    let edges = y_cell_edges(y);
    let p = 2.0 - 2.0 * a;
    let weights: Vec<f64> = (0..y.len())
        .map(|k| (edges[k + 1].powf(p) - edges[k].powf(p)) / p)
        .collect();
    let values = ext.values();
    let mut acc = 0.0;
    for i in 0..values.nrows() {
        let x = grid.dof_position(i);
        let dx2: f64 = (0..grid.dim()).map(|d| (x[d] - center[d]).powi(2)).sum();
        if dx2 >= r * r {
            continue;
        }
        for (k, &yk) in y.iter().enumerate() {
            if dx2 + yk * yk < r * r {
                acc += weights[k] * values[(i, k)].powi(2);
            }
        }
    }
    (grid.cell_volume() * acc).sqrt()
}

/// `mass(B⁺_{2R}) / mass(B⁺_R)` for each radius.
pub fn doubling_ratio(ext: &ExtensionField, center: Point, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let grid = ext.grid();
    let y_top = *ext.y_nodes().last().expect("nonempty ladder");
    let x_lim = grid.half_length();
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
            }
            let reach = 2.0 * r;
            let outside = (0..grid.dim()).any(|d| center[d].abs() + reach > x_lim);
            if reach > y_top || (grid.boundary() == Boundary::Dirichlet && outside) {
                return Err(Error::InvalidArgument(format!(
                    "half-ball of radius {reach} leaves the sampled box"
                )));
            }
            let small = half_ball_mass(ext, center, r);
            if small == 0.0 {
                return Err(Error::Degenerate(format!(
                    "field vanishes on the half-ball of radius {r}"
                )));
            }
            Ok((r, half_ball_mass(ext, center, reach) / small))
        })
        .collect()
}

/// `ξ(x, y) = φ(x) ψ(y)` with `φ = (1 - |x-c|²/r²)₊⁴` and `ψ = (1 - ((y-y_c)/r_y)²)₊⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakTestFunction {
    pub center: Point,
    pub radius: f64,
    pub y_center: f64,
    pub y_radius: f64,
}

fn bump(s: f64) -> (f64, f64) {
    // (1 - s²)⁴ and its derivative in s
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let b = 1.0 - s * s;
    (b.powi(4), -8.0 * s * b.powi(3))
}

impl WeakTestFunction {
    fn x_profile(&self, grid: &Grid) -> DVector<f64> {
        grid.sample(|x| {
            let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
            bump(r2.sqrt() / self.radius).0
        })
    }

    fn y_profile(&self, y: f64) -> (f64, f64) {
        let (v, d) = bump((y - self.y_center) / self.y_radius);
        (v, d / self.y_radius)
    }
}

/// Four test functions around the origin in a range of heights that the ladder resolves.
pub fn standard_weak_tests(ext: &ExtensionField) -> Vec<WeakTestFunction> {
    let x = ext.grid().half_length();
    let y = ext.y_nodes();
    let top = y[y.len() - 1];
    let lo = y[(y.len() / 4).max(1)];
    let hi = (lo * 8.0).min(0.5 * top);
    let mid = 0.5 * (lo + hi);
    let rad = 0.5 * (hi - lo);
    let mut out = vec![];
    for &(cx, r) in &[(0.0, 0.5), (0.25, 0.35)] {
        let center = [cx * x, cx * x];
        out.push(WeakTestFunction {
            center,
            radius: r * x,
            y_center: mid,
            y_radius: rad,
        });
        out.push(WeakTestFunction {
            center,
            radius: r * x,
            y_center: 0.5 * (lo + mid),
            y_radius: 0.5 * rad,
        });
    }
    out
}

/// Per-test and maximal normalized weak-form residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub per_test: Vec<f64>,
    pub max: f64,
}

/// `∫ y^{1-2α}(∂_y U ∂_y ξ + a∇U·∇ξ + cUξ)` with the `x`-part as `h^n Uᵀ K ξ`, `∂_y U` by
/// finite differences in `y`, and trapezoid quadrature over the ladder; each value is
/// divided by the weighted `H¹` norms of `ξ` and of `U` on the `y`-range of `ξ`.
pub fn weak_residual(ext: &ExtensionField, tests: &[WeakTestFunction]) -> Result<WeakResidual> {
    let k = ext
        .operator()
        .ok_or_else(|| Error::InvalidArgument("weak residual needs the operator matrix".into()))?;
    let grid = ext.grid();
    let a = ext.alpha();
    let y = ext.y_nodes();
    let top = y[y.len() - 1];
    let weight: Vec<f64> = y.iter().map(|&v| v.powf(1.0 - 2.0 * a)).collect();
    let du = derivative_in_y(ext);
    let slices: Vec<DVector<f64>> = (0..y.len()).map(|j| ext.slice(j)).collect();

    let e_u: Vec<f64> = (0..y.len())
        .map(|j| {
            let u = &slices[j];
            weight[j] * (inner(grid, &du[j], &du[j]) + inner(grid, u, &(k * u)) + inner(grid, u, u))
        })
        .collect();

    let mut per_test = Vec::with_capacity(tests.len());
    for t in tests {
        if t.y_center - t.y_radius <= y[0] || t.y_center + t.y_radius >= top {
            return Err(Error::InvalidArgument(
                "test function support must lie strictly inside the ladder".into(),
            ));
        }
        let phi = t.x_profile(grid);
        let kphi = k * &phi;
        let pp = inner(grid, &phi, &phi);
        let pkp = inner(grid, &phi, &kphi);
        let mut form = Vec::with_capacity(y.len());
        let mut e_xi = Vec::with_capacity(y.len());
        for j in 0..y.len() {
            let (psi, dpsi) = t.y_profile(y[j]);
            form.push(weight[j] * (dpsi * inner(grid, &du[j], &phi) + psi * inner(grid, &slices[j], &kphi)));
            e_xi.push(weight[j] * (dpsi * dpsi * pp + psi * psi * (pkp + pp)));
        }
        let norm_xi = trapezoid(y, &e_xi).sqrt();
        let (lo, hi) = (t.y_center - t.y_radius, t.y_center + t.y_radius);
        let lo_k = y.iter().rposition(|&v| v <= lo).unwrap_or(0);
        let hi_k = y.iter().position(|&v| v >= hi).unwrap_or(y.len() - 1);
        let norm_u = trapezoid(&y[lo_k..=hi_k], &e_u[lo_k..=hi_k]).sqrt();
        let b = trapezoid(y, &form);
        per_test.push(if norm_u > 0.0 && norm_xi > 0.0 {
            b.abs() / (norm_u * norm_xi)
        } else {
            0.0
        });
    }
    let max = per_test.iter().copied().fold(0.0, f64::max);
    Ok(WeakResidual { per_test, max })
}
