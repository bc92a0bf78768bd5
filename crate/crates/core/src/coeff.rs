//! Sampled coefficient fields `a_jk(x)`, `c(x)` and the structural hypothesis checks.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result, Violation};
use crate::grid::Grid;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Identity,
    RadialBump,
    Tabulated,
}

/// `a(x) = I + scale * exp(-|x|²/width²) * matrix`, `c(x) = c_amp * exp(-|x|²/c_width²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialBump {
    pub scale: f64,
    pub width: f64,
    /// Row-major `dim × dim` symmetric matrix.
    pub matrix: Vec<f64>,
    pub c_amp: f64,
    pub c_width: f64,
}

impl RadialBump {
    /// Bump with `M = I` and no potential.
    pub fn isotropic(dim: usize, scale: f64, width: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for d in 0..dim {
            matrix[d * dim + d] = 1.0;
        }
        RadialBump {
            scale,
            width,
            matrix,
            c_amp: 0.0,
            c_width: width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientParams {
    Identity,
    RadialBump(RadialBump),
    /// Per-node samples: `a` row-major per node, `c` one value per node.
    Tabulated {
        a: Vec<f64>,
        c: Vec<f64>,
    },
}

impl CoefficientParams {
    pub fn kind(&self) -> CoefficientKind {
        match self {
            CoefficientParams::Identity => CoefficientKind::Identity,
            CoefficientParams::RadialBump(_) => CoefficientKind::RadialBump,
            CoefficientParams::Tabulated { .. } => CoefficientKind::Tabulated,
        }
    }
}

/// Coefficients sampled on every node of a grid (boundary nodes included, since
/// face averages next to the boundary use them).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    dim: usize,
    node_count: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    params: CoefficientParams,
    lambda: f64,
}

impl CoefficientField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn kind(&self) -> CoefficientKind {
        self.params.kind()
    }

    pub fn params(&self) -> &CoefficientParams {
        &self.params
    }

    /// Smallest eigenvalue of `a(x)` over all nodes.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `a_jk` at a node.
    pub fn a(&self, node: usize, j: usize, k: usize) -> f64 {
        self.a[node * self.dim * self.dim + j * self.dim + k]
    }

    pub fn a_node(&self, node: usize) -> &[f64] {
        let d2 = self.dim * self.dim;
        &self.a[node * d2..(node + 1) * d2]
    }

    pub fn c(&self, node: usize) -> f64 {
        self.c[node]
    }

    /// Unvalidated field from raw samples; use [`CoefficientField::validate`] or
    /// [`check_hypotheses`] to inspect it.
    pub fn from_samples(grid: &Grid, a: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let dim = grid.dim();
        let nodes = grid.node_count();
        if a.len() != nodes * dim * dim {
            return Err(Error::DimensionMismatch {
                expected: nodes * dim * dim,
                got: a.len(),
            });
        }
        if c.len() != nodes {
            return Err(Error::DimensionMismatch {
                expected: nodes,
                got: c.len(),
            });
        }
        let lambda = (0..nodes)
            .map(|n| min_eigenvalue_sym(&a[n * dim * dim..(n + 1) * dim * dim], dim))
            .fold(f64::INFINITY, f64::min);
        Ok(CoefficientField {
            dim,
            node_count: nodes,
            params: CoefficientParams::Tabulated {
                a: a.clone(),
                c: c.clone(),
            },
            a,
            c,
            lambda,
        })
    }

    /// Checks symmetry, ellipticity and nonnegativity, naming the first offending node.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let d = self.dim;
        for node in 0..self.node_count {
            let a = self.a_node(node);
            for j in 0..d {
                for k in (j + 1)..d {
                    let (ajk, akj) = (a[j * d + k], a[k * d + j]);
                    if (ajk - akj).abs() > SYMMETRY_TOL * ajk.abs().max(akj.abs()).max(1.0) {
                        return Err(violation(grid, Violation::Asymmetric, node, ajk - akj));
                    }
                }
            }
        }
        let (node, lam) = (0..self.node_count)
            .map(|n| (n, min_eigenvalue_sym(self.a_node(n), d)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if lam <= 0.0 {
            return Err(violation(grid, Violation::NotElliptic, node, lam));
        }
        if let Some(node) = (0..self.node_count).find(|&n| !(self.c[n] >= 0.0)) {
            return Err(violation(grid, Violation::NegativePotential, node, self.c[node]));
        }
        Ok(())
    }

    /// The same field with `c0` added to `c` at every node.
    pub fn with_c_shift(&self, c0: f64) -> CoefficientField {
        let mut out = self.clone();
        for v in &mut out.c {
            *v += c0;
        }
        if let CoefficientParams::Tabulated { c, .. } = &mut out.params {
            for v in c {
                *v += c0;
            }
        }
        out
    }
}

fn violation(grid: &Grid, violation: Violation, node: usize, value: f64) -> Error {
    Error::FieldViolation {
        violation,
        node,
        position: grid.node_position(node)[..grid.dim()].to_vec(),
        value,
    }
}

/// Smallest eigenvalue of a symmetric 1×1 or 2×2 matrix (upper triangle used).
pub(crate) fn min_eigenvalue_sym(a: &[f64], dim: usize) -> f64 {
    match dim {
        1 => a[0],
        2 => {
            let (p, q, r) = (a[0], 0.5 * (a[1] + a[2]), a[3]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            mean - rad
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}

/// Samples a coefficient field of the given kind and validates it.
pub fn make_coefficients(grid: &Grid, params: &CoefficientParams) -> Result<CoefficientField> {
    let dim = grid.dim();
    let nodes = grid.node_count();
    let field = match params {
        CoefficientParams::Identity => {
            let mut a = vec![0.0; nodes * dim * dim];
            for n in 0..nodes {
                for d in 0..dim {
                    a[n * dim * dim + d * dim + d] = 1.0;
                }
            }
            CoefficientField {
                dim,
                node_count: nodes,
                a,
                c: vec![0.0; nodes],
                params: CoefficientParams::Identity,
                lambda: 1.0,
            }
        }
        CoefficientParams::RadialBump(b) => {
            if b.matrix.len() != dim * dim {
                return Err(Error::InvalidParams(format!(
                    "radial_bump matrix needs {} entries, got {}",
                    dim * dim,
                    b.matrix.len()
                )));
            }
            if !(b.width > 0.0) || !(b.c_width > 0.0) {
                return Err(Error::InvalidParams("bump widths must be positive".into()));
            }
            if b.c_amp < 0.0 {
                return Err(Error::InvalidParams("c_amp must be nonnegative".into()));
            }
            let mut a = vec![0.0; nodes * dim * dim];
            let mut c = vec![0.0; nodes];
            for n in 0..nodes {
                let p = grid.node_position(n);
                let r2: f64 = p[..dim].iter().map(|x| x * x).sum();
                let bump = b.scale * (-r2 / (b.width * b.width)).exp();
                for j in 0..dim {
                    for k in 0..dim {
                        let delta = if j == k { 1.0 } else { 0.0 };
                        a[n * dim * dim + j * dim + k] = delta + bump * b.matrix[j * dim + k];
                    }
                }
                c[n] = b.c_amp * (-r2 / (b.c_width * b.c_width)).exp();
            }
            let lambda = (0..nodes)
                .map(|n| min_eigenvalue_sym(&a[n * dim * dim..(n + 1) * dim * dim], dim))
                .fold(f64::INFINITY, f64::min);
            CoefficientField {
                dim,
                node_count: nodes,
                a,
                c,
                params: params.clone(),
                lambda,
            }
        }
        CoefficientParams::Tabulated { a, c } => CoefficientField::from_samples(grid, a.clone(), c.clone())?,
    };
    field.validate(grid)?;
    Ok(field)
}

/// Reads a tabulated field: one row per node with columns `i[, j], a_11[, a_12, a_21, a_22], c`.
/// A header row is expected.
pub fn load_table(grid: &Grid, path: &Path) -> Result<CoefficientField> {
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let nodes = grid.node_count();
    let mut a = vec![f64::NAN; nodes * dim * dim];
    let mut c = vec![f64::NAN; nodes];
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let width = dim + dim * dim + 1;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Error::InvalidParams(format!(
                "{}: row {} has {} columns, expected {width}",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            record[k].parse::<f64>().map_err(|e| {
                Error::InvalidParams(format!("{}: row {}, column {}: {e}", path.display(), line + 2, k + 1))
            })
        };
        let mut idx = [0usize; 2];
        for (d, slot) in idx.iter_mut().enumerate().take(dim) {
            let v = num(d)?;
            if v < 0.0 || v.fract() != 0.0 || v as usize >= n {
                return Err(Error::InvalidParams(format!(
                    "{}: row {}: node index {v} out of range",
                    path.display(),
                    line + 2
                )));
            }
            *slot = v as usize;
        }
        let node = grid.node_index(idx);
        for e in 0..dim * dim {
            a[node * dim * dim + e] = num(dim + e)?;
        }
        c[node] = num(dim + dim * dim)?;
    }
    if let Some(node) = (0..nodes).find(|&k| c[k].is_nan()) {
        return Err(Error::InvalidParams(format!(
            "{}: no row for node {:?}",
            path.display(),
            grid.node_multi_index(node)
        )));
    }
    make_coefficients(grid, &CoefficientParams::Tabulated { a, c })
}

/// Regularity proxy: largest finite-difference first and second derivatives of `a_jk`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityProxy {
    pub max_first_derivative: f64,
    pub max_second_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub symmetric: bool,
    pub asymmetric_nodes: Vec<usize>,
    pub ellipticity_lambda: f64,
    pub c_nonnegative: bool,
    pub negative_c_nodes: Vec<usize>,
    /// `(R, sup_{|x| >= R} sum_jk |a_jk - delta_jk|)` at `R = X/4, X/2, 3X/4`.
    pub flatness_profile: Vec<(f64, f64)>,
    pub regularity_proxy: RegularityProxy,
}

/// Reports every structural hypothesis; never fails.
pub fn check_hypotheses(field: &CoefficientField, grid: &Grid) -> HypothesisReport {
    let d = field.dim();
    let nodes = field.node_count();
    let asymmetric_nodes: Vec<usize> = (0..nodes)
        .filter(|&n| {
            let a = field.a_node(n);
            (0..d).any(|j| {
                ((j + 1)..d).any(|k| {
                    let (x, y) = (a[j * d + k], a[k * d + j]);
                    (x - y).abs() > SYMMETRY_TOL * x.abs().max(y.abs()).max(1.0)
                })
            })
        })
        .collect();
    let negative_c_nodes: Vec<usize> = (0..nodes).filter(|&n| !(field.c(n) >= 0.0)).collect();

    let radii = [0.25, 0.5, 0.75].map(|f| f * grid.half_length());
    let deviation: Vec<(f64, f64)> = (0..nodes)
        .map(|n| {
            let p = grid.node_position(n);
            let r = p[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
            let a = field.a_node(n);
            let dev: f64 = (0..d)
                .flat_map(|j| (0..d).map(move |k| (j, k)))
                .map(|(j, k)| (a[j * d + k] - if j == k { 1.0 } else { 0.0 }).abs())
                .sum();
            (r, dev)
        })
        .collect();
    let flatness_profile = radii
        .iter()
        .map(|&radius| {
            let sup = deviation
                .iter()
                .filter(|(r, _)| *r >= radius * (1.0 - 1e-12))
                .map(|&(_, v)| v)
                .fold(0.0, f64::max);
            (radius, sup)
        })
        .collect();

    let h = grid.spacing();
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for n in 0..nodes {
        for axis in 0..d {
            let (Some(fwd), Some(bwd)) = (grid.neighbor(n, axis, 1), grid.neighbor(n, axis, -1)) else {
                continue;
            };
            for e in 0..d * d {
                let (a0, ap, am) = (field.a_node(n)[e], field.a_node(fwd)[e], field.a_node(bwd)[e]);
                first = first.max(((ap - am) / (2.0 * h)).abs());
                second = second.max(((ap - 2.0 * a0 + am) / (h * h)).abs());
            }
        }
    }

    HypothesisReport {
        symmetric: asymmetric_nodes.is_empty(),
        asymmetric_nodes,
        ellipticity_lambda: field.lambda(),
        c_nonnegative: negative_c_nodes.is_empty(),
        negative_c_nodes,
        flatness_profile,
        regularity_proxy: RegularityProxy {
            max_first_derivative: first,
            max_second_derivative: second,
        },
    }
}
