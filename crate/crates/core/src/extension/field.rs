use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use super::quadrature::{mode_values, QuadratureRule, CONVERGENCE_TOL};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::{fractional_power, SpectralDecomposition};

/// Target accuracy of the conormal recovery; the divergence flag fires at 10× this.
pub const RECOVERY_TOL: f64 = 1e-3;

/// `c*_α = 4^α Γ(α) / (2α Γ(-α))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConormalConstant {
    pub alpha: f64,
    pub value: f64,
}

impl ConormalConstant {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let value = 4f64.powf(alpha) * gamma(alpha) / (2.0 * alpha * gamma(-alpha));
        Ok(ConormalConstant { alpha, value })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "extension needs alpha in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Geometric ladder `y_k = y0 ρ^k` up to `y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ladder {
    pub y0: f64,
    pub ratio: f64,
    pub y_max: f64,
}

impl Ladder {
    /// `y0 = 0.02/√λ_max`, `ρ = 2^{1/8}`, `y_max = 40/√λ₁` with `λ₁` the smallest positive eigenvalue.
    pub fn for_spectrum(dec: &SpectralDecomposition) -> Self {
        let lmax = dec.lambda_max().max(1e-12);
        let l1 = (0..dec.dof_count())
            .map(|i| dec.effective_eigenvalue(i))
            .find(|&l| l > 0.0)
            .unwrap_or(1.0);
        Ladder {
            y0: 0.02 / lmax.sqrt(),
            ratio: 2f64.powf(0.125),
            y_max: 40.0 / l1.sqrt(),
        }
    }

    /// Halves `y0` while keeping the same upper reach.
    pub fn refined(&self) -> Self {
        Ladder {
            y0: 0.5 * self.y0,
            ..*self
        }
    }

    /// Square root of the ratio: twice as many nodes per octave.
    pub fn densified(&self) -> Self {
        Ladder {
            ratio: self.ratio.sqrt(),
            ..*self
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mut out = vec![];
        let mut y = self.y0;
        while y <= self.y_max * (1.0 + 1e-12) {
            out.push(y);
            y *= self.ratio;
        }
        out
    }
}

/// Quadrature and ladder together; refinement doubles the former and halves the ladder base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionResolution {
    pub quadrature: QuadratureRule,
    pub ladder: Ladder,
}

impl ExtensionResolution {
    pub fn for_spectrum(dec: &SpectralDecomposition) -> Self {
        ExtensionResolution {
            quadrature: QuadratureRule::for_spectrum(dec),
            ladder: Ladder::for_spectrum(dec),
        }
    }

    pub fn refined(&self) -> Self {
        ExtensionResolution {
            quadrature: self.quadrature.doubled(),
            ladder: self.ladder.refined(),
        }
    }
}

/// Sampled extension `U(x, y_k)` together with `y^{1-2α} ∂_y U(x, y_k)`.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    base: DVector<f64>,
    alpha: f64,
    y_nodes: Vec<f64>,
    values: DMatrix<f64>,
    conormal: Option<DMatrix<f64>>,
    base_power: Option<DVector<f64>>,
    quadrature: Option<QuadratureRule>,
    grid: Grid,
    operator: Option<Arc<DMatrix<f64>>>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    alpha: f64,
    dofs: usize,
    y_nodes: &'a [f64],
    quadrature: Option<QuadratureRule>,
}

impl ExtensionField {
    /// A field given directly by its samples (no conormal data, no operator).
    pub fn from_samples(grid: &Grid, alpha: f64, y_nodes: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        check_ladder(&y_nodes)?;
        if values.nrows() != grid.dof_count() || values.ncols() != y_nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.dof_count() * y_nodes.len(),
                got: values.len(),
            });
        }
        Ok(ExtensionField {
            base: values.column(0).into_owned(),
            alpha,
            y_nodes,
            values,
            conormal: None,
            base_power: None,
            quadrature: None,
            grid: grid.clone(),
            operator: None,
        })
    }

    /// `U ≡ value` on every sample.
    pub fn synthetic_constant(grid: &Grid, alpha: f64, y_nodes: Vec<f64>, value: f64) -> Result<Self> {
        let values = DMatrix::from_element(grid.dof_count(), y_nodes.len(), value);
        ExtensionField::from_samples(grid, alpha, y_nodes, values)
    }

    /// Same field with replaced samples; conormal data is dropped since it no longer matches.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Ok(ExtensionField {
            values,
            conormal: None,
            ..self.clone()
        })
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    /// `U[dof, k]`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// `y_k^{1-2α} ∂_y U[dof, k]`, present for fields built by [`extend`].
    pub fn conormal(&self) -> Option<&DMatrix<f64>> {
        self.conormal.as_ref()
    }

    /// `L^α u` computed spectrally at construction.
    pub fn base_power(&self) -> Option<&DVector<f64>> {
        self.base_power.as_ref()
    }

    pub fn quadrature(&self) -> Option<&QuadratureRule> {
        self.quadrature.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn operator(&self) -> Option<&DMatrix<f64>> {
        self.operator.as_deref()
    }

    pub fn slice(&self, k: usize) -> DVector<f64> {
        self.values.column(k).into_owned()
    }

    /// `sup_k ‖U(·, y_k)‖₂`.
    pub fn sup_norm_in_y(&self) -> f64 {
        (0..self.y_nodes.len())
            .map(|k| self.grid.norm(&self.slice(k)))
            .fold(0.0, f64::max)
    }

    /// `‖U(·, y_0) - u‖₂`.
    pub fn trace_error(&self) -> f64 {
        self.grid.norm(&(self.slice(0) - &self.base))
    }

    /// Envelope `10 y_0^{min(2α, 1)} ‖u‖₂` for the trace error.
    pub fn trace_tolerance(&self) -> f64 {
        10.0 * self.y_nodes[0].powf((2.0 * self.alpha).min(1.0)) * self.grid.norm(&self.base)
    }

    /// CSV with columns `x_index,y,U`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "x_index,y,U").map_err(io)?;
        for (k, y) in self.y_nodes.iter().enumerate() {
            for i in 0..self.values.nrows() {
                writeln!(
                    w,
                    "{},{:.17e},{:.17e}",
                    self.grid.node_of_dof(i),
                    y,
                    self.values[(i, k)]
                )
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Metadata {
            alpha: self.alpha,
            dofs: self.values.nrows(),
            y_nodes: &self.y_nodes,
            quadrature: self.quadrature,
        })?)
    }
}

fn check_ladder(y: &[f64]) -> Result<()> {
    if y.is_empty() || !(y[0] > 0.0) || y.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "y nodes must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Samples `U(·, y_k) = V M(Λ, y_k) Vᵀ u` and the matching conormal quantity.
pub fn extend(
    dec: &SpectralDecomposition,
    alpha: f64,
    u: &DVector<f64>,
    y_nodes: &[f64],
    quadrature: &QuadratureRule,
) -> Result<ExtensionField> {
    check_alpha(alpha)?;
    check_ladder(y_nodes)?;
    let grid = dec.require_grid()?.clone();
    let modes = dec.to_modes(u)?;
    let n = dec.dof_count();
    let ny = y_nodes.len();

    // Row-major per mode: (M, G, change) over the ladder.
    let per_mode: Vec<Vec<(f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let l = dec.effective_eigenvalue(i);
            y_nodes
                .iter()
                .map(|&y| {
                    let v = mode_values(quadrature, alpha, l, y);
                    (v.m, v.g, v.change)
                })
                .collect()
        })
        .collect();

    let mut bad = 0;
    let mut worst = (0.0, 0.0, 0.0);
    for (i, row) in per_mode.iter().enumerate() {
        for (k, &(_, _, change)) in row.iter().enumerate() {
            if change > CONVERGENCE_TOL {
                bad += 1;
                if change > worst.0 {
                    worst = (change, dec.effective_eigenvalue(i), y_nodes[k]);
                }
            }
        }
    }
    if bad > 0 {
        return Err(Error::QuadratureNotConverged {
            count: bad,
            worst: worst.0,
            lambda: worst.1,
            y: worst.2,
        });
    }

    let mut mc = DMatrix::zeros(n, ny);
    let mut gc = DMatrix::zeros(n, ny);
    for (i, row) in per_mode.iter().enumerate() {
        for (k, &(m, g, _)) in row.iter().enumerate() {
            mc[(i, k)] = m * modes[i];
            gc[(i, k)] = g * modes[i];
        }
    }
    let v = dec.eigenvectors();
    Ok(ExtensionField {
        base: u.clone(),
        alpha,
        y_nodes: y_nodes.to_vec(),
        values: v * mc,
        conormal: Some(v * gc),
        base_power: Some(fractional_power(dec, alpha, u)?),
        quadrature: Some(*quadrature),
        grid,
        operator: Some(dec.shared_matrix()),
    })
}

/// [`extend`] at a given resolution.
pub fn extend_at(
    dec: &SpectralDecomposition,
    alpha: f64,
    u: &DVector<f64>,
    resolution: &ExtensionResolution,
) -> Result<ExtensionField> {
    extend(dec, alpha, u, &resolution.ladder.nodes(), &resolution.quadrature)
}

/// `L^α u = c*_α lim_{y→0} y^{1-2α} ∂_y U`, the limit taken by Richardson extrapolation
/// on the three smallest ladder nodes with error exponents `2-2α` and `2`.
pub fn conormal_recover(ext: &ExtensionField) -> Result<DVector<f64>> {
    let g = ext
        .conormal
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("field carries no conormal data".into()))?;
    if ext.y_nodes.len() < 3 {
        return Err(Error::InvalidArgument(
            "conormal recovery needs at least 3 y nodes".into(),
        ));
    }
    let y = &ext.y_nodes[..3];
    let p1 = 2.0 - 2.0 * ext.alpha;
    let w3 = limit_weights(y, p1, 2.0)?;
    let w2 = two_point_weights(y[0], y[1], p1);
    let c0 = g.column(0);
    let c1 = g.column(1);
    let c2 = g.column(2);
    let three = c0 * w3[0] + c1 * w3[1] + c2 * w3[2];
    let two = c0 * w2[0] + c1 * w2[1];
    let scale = three.norm();
    if scale > 0.0 {
        let discrepancy = (&three - &two).norm() / scale;
        if discrepancy > 10.0 * RECOVERY_TOL {
            return Err(Error::ExtrapolationDiverged { discrepancy });
        }
    }
    let c = ConormalConstant::new(ext.alpha)?.value;
    Ok(three * c)
}

/// Weights `w` with `Σ w_i f(y_i) = f(0)` for `f = a + b y^{p1} + c y^{p2}`.
fn limit_weights(y: &[f64], p1: f64, p2: f64) -> Result<Vector3<f64>> {
    let m = Matrix3::new(
        1.0,
        1.0,
        1.0,
        y[0].powf(p1),
        y[1].powf(p1),
        y[2].powf(p1),
        y[0].powf(p2),
        y[1].powf(p2),
        y[2].powf(p2),
    );
    m.lu()
        .solve(&Vector3::new(1.0, 0.0, 0.0))
        .ok_or_else(|| Error::Degenerate("coincident y nodes".into()))
}

fn two_point_weights(y0: f64, y1: f64, p: f64) -> [f64; 2] {
    let (a, b) = (y0.powf(p), y1.powf(p));
    [b / (b - a), -a / (b - a)]
}
