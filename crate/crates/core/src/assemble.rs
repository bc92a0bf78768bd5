//! Flux-form assembly of `L v = -∂_k(a_jk ∂_j v) + c v`.
//!
//! The matrix is built from its quadratic form, one local contribution at a time:
//!
//! * axis faces: `a_face (u_q - u_p)² / h²` with `a_face = (a_p + a_q) / 2`
//!   (diagonal entry `a_jj` only), which reproduces the row formula
//!   `-(a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1})) / h² + c_i u_i`;
//! * 2D cells: `2 b g_x g_y` where `b` is the average of the symmetrized `a_01` over
//!   the four cell corners and `g_x`, `g_y` are the cell-averaged differences;
//! * nodes: `c_i u_i²`.
//!
//! Each off-diagonal contribution is added to `(p, q)` and `(q, p)` in the same step,
//! so the transposed entries are bit-identical.

use nalgebra::DMatrix;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    FluxForm,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    matrix: DMatrix<f64>,
    grid: Grid,
    field: CoefficientField,
    stencil: Stencil,
}

impl DiscreteOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn field(&self) -> &CoefficientField {
        &self.field
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn dof_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest Gershgorin lower bound `a_ii - sum_{j != i} |a_ij|` over all rows.
    pub fn gershgorin_min(&self) -> f64 {
        (0..self.matrix.nrows())
            .map(|i| {
                let row = self.matrix.row(i);
                let off: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.abs())
                    .sum();
                row[i] - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

struct Builder<'a> {
    grid: &'a Grid,
    k: DMatrix<f64>,
}

impl Builder<'_> {
    /// Adds `v` at `(p, q)` and `(q, p)`, or once on the diagonal.
    fn add_pair(&mut self, p: usize, q: usize, v: f64) {
        if p == q {
            self.k[(p, p)] += v;
        } else {
            self.k[(p, q)] += v;
            self.k[(q, p)] += v;
        }
    }

    fn dof(&self, node: usize) -> Option<usize> {
        self.grid.dof_of_node(node)
    }
}

pub fn assemble(grid: &Grid, field: &CoefficientField) -> Result<DiscreteOperator> {
    if field.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: field.dim(),
        });
    }
    if field.node_count() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: field.node_count(),
        });
    }
    let dofs = grid.dof_count();
    let dim = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let mut b = Builder {
        grid,
        k: DMatrix::zeros(dofs, dofs),
    };

    // axis faces
    for node in 0..grid.node_count() {
        for axis in 0..dim {
            let Some(next) = grid.neighbor(node, axis, 1) else {
                continue;
            };
            let w = 0.5 * (field.a(node, axis, axis) + field.a(next, axis, axis)) / h2;
            let (p, q) = (b.dof(node), b.dof(next));
            if let Some(p) = p {
                b.add_pair(p, p, w);
            }
            if let Some(q) = q {
                b.add_pair(q, q, w);
            }
            if let (Some(p), Some(q)) = (p, q) {
                b.add_pair(p, q, -w);
            }
        }
    }

    // mixed derivative cells
    if dim == 2 {
        let n = grid.points_per_axis();
        let cells_per_axis = match grid.boundary() {
            Boundary::Dirichlet => n - 1,
            Boundary::Periodic => n,
        };
        let h = grid.spacing();
        // corners: (i,j), (i+1,j), (i,j+1), (i+1,j+1)
        let cx = [-1.0, 1.0, -1.0, 1.0].map(|v| v / (2.0 * h));
        let cy = [-1.0, -1.0, 1.0, 1.0].map(|v| v / (2.0 * h));
        for j in 0..cells_per_axis {
            for i in 0..cells_per_axis {
                let base = grid.node_index([i, j]);
                let right = grid.neighbor(base, 0, 1).expect("cell corner");
                let up = grid.neighbor(base, 1, 1).expect("cell corner");
                let diag = grid.neighbor(right, 1, 1).expect("cell corner");
                let corners = [base, right, up, diag];
                let bxy = corners
                    .iter()
                    .map(|&c| 0.5 * (field.a(c, 0, 1) + field.a(c, 1, 0)))
                    .sum::<f64>()
                    / 4.0;
                if bxy == 0.0 {
                    continue;
                }
                for s in 0..4 {
                    let Some(p) = b.dof(corners[s]) else { continue };
                    for t in s..4 {
                        let Some(q) = b.dof(corners[t]) else { continue };
                        let v = if s == t {
                            2.0 * bxy * cx[s] * cy[s]
                        } else {
                            bxy * (cx[s] * cy[t] + cy[s] * cx[t])
                        };
                        b.add_pair(p, q, v);
                    }
                }
            }
        }
    }

    for node in 0..grid.node_count() {
        if let Some(p) = b.dof(node) {
            b.k[(p, p)] += field.c(node);
        }
    }

    Ok(DiscreteOperator {
        matrix: b.k,
        grid: grid.clone(),
        field: field.clone(),
        stencil: Stencil::FluxForm,
    })
}
