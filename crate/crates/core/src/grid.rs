//! Uniform tensor grids on `[-X, X]^dim`.
//!
//! Nodes are indexed with axis 0 running fastest: node `(i0, i1)` has flat index
//! `i0 + n * i1`. Degrees of freedom (DOFs) are the nodes that carry unknowns: every
//! node for periodic grids, the interior nodes for Dirichlet grids.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidGrid(format!("unknown boundary '{other}'"))),
        }
    }
}

/// A node position; only the first `dim` entries are meaningful.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    points_per_axis: usize,
    half_length: f64,
    spacing: f64,
    boundary: Boundary,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64, boundary: Boundary) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points per axis, got {points_per_axis}"
            )));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half_length must be positive, got {half_length}"
            )));
        }
        let spacing = match boundary {
            Boundary::Dirichlet => 2.0 * half_length / (points_per_axis - 1) as f64,
            Boundary::Periodic => 2.0 * half_length / points_per_axis as f64,
        };
        Ok(Grid {
            dim,
            points_per_axis,
            half_length,
            spacing,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Volume of one grid cell, `h^dim`; the weight of the discrete L² inner product.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing
    }

    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.axis_coordinate(i)).collect()
    }

    /// Multi-index of a flat node index.
    pub fn node_multi_index(&self, node: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % n, node / n]
        }
    }

    pub fn node_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + self.points_per_axis * idx[1]
        }
    }

    pub fn node_position(&self, node: usize) -> Point {
        let idx = self.node_multi_index(node);
        let mut p = [0.0; 2];
        for d in 0..self.dim {
            p[d] = self.axis_coordinate(idx[d]);
        }
        p
    }

    /// Whether a node index along one axis carries an unknown.
    pub fn is_dof_axis_index(&self, i: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => i < self.points_per_axis,
            Boundary::Dirichlet => i > 0 && i + 1 < self.points_per_axis,
        }
    }

    pub fn dofs_per_axis(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.points_per_axis,
            Boundary::Dirichlet => self.points_per_axis - 2,
        }
    }

    pub fn dof_count(&self) -> usize {
        self.dofs_per_axis().pow(self.dim as u32)
    }

    fn axis_offset(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => 0,
            Boundary::Dirichlet => 1,
        }
    }

    /// DOF index of a node, or `None` for Dirichlet boundary nodes.
    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        let idx = self.node_multi_index(node);
        let m = self.dofs_per_axis();
        let off = self.axis_offset();
        let mut dof = 0;
        let mut stride = 1;
        for &i in idx.iter().take(self.dim) {
            if !self.is_dof_axis_index(i) {
                return None;
            }
            dof += (i - off) * stride;
            stride *= m;
        }
        Some(dof)
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        let m = self.dofs_per_axis();
        let off = self.axis_offset();
        let mut idx = [0usize; 2];
        let mut rest = dof;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rest % m + off;
            rest /= m;
        }
        self.node_index(idx)
    }

    pub fn dof_position(&self, dof: usize) -> Point {
        self.node_position(self.node_of_dof(dof))
    }

    pub fn dof_positions(&self) -> Vec<Point> {
        (0..self.dof_count()).map(|k| self.dof_position(k)).collect()
    }

    /// Samples a function of position on the DOFs.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> DVector<f64> {
        DVector::from_iterator(
            self.dof_count(),
            (0..self.dof_count()).map(|k| {
                let p = self.dof_position(k);
                f(&p[..self.dim])
            }),
        )
    }

    /// Extends a DOF vector to all nodes, padding Dirichlet boundary nodes with zero.
    pub fn to_nodes<T: Copy + Default>(&self, dofs: &[T]) -> Vec<T> {
        (0..self.node_count())
            .map(|node| self.dof_of_node(node).map_or(T::default(), |k| dofs[k]))
            .collect()
    }

    /// Neighbor node along `axis` at offset `step` (±1), wrapping for periodic grids.
    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> Option<usize> {
        let mut idx = self.node_multi_index(node);
        let n = self.points_per_axis as isize;
        let j = idx[axis] as isize + step;
        let j = match self.boundary {
            Boundary::Periodic => j.rem_euclid(n),
            Boundary::Dirichlet if (0..n).contains(&j) => j,
            Boundary::Dirichlet => return None,
        };
        idx[axis] = j as usize;
        Some(self.node_index(idx))
    }

    /// Same grid with `points_per_axis` doubled.
    pub fn refined(&self) -> Grid {
        Grid::new(self.dim, 2 * self.points_per_axis, self.half_length, self.boundary)
            .expect("refinement of a valid grid is valid")
    }

    /// Discrete L² norm with cell-volume weight.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        (self.cell_volume() * v.norm_squared()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_line() {
        let g = Grid::new(1, 5, 2.0, Boundary::Dirichlet).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis_coordinates(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let interior: Vec<f64> = g.dof_positions().iter().map(|p| p[0]).collect();
        assert_eq!(interior, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn periodic_line_drops_endpoint() {
        let g = Grid::new(1, 4, 2.0, Boundary::Periodic).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis_coordinates(), vec![-2.0, -1.0, 0.0, 1.0]);
        assert_eq!(g.dof_count(), 4);
        assert_eq!(g.neighbor(3, 0, 1), Some(0));
    }

    #[test]
    fn square_counts() {
        let g = Grid::new(2, 8, 1.0, Boundary::Dirichlet).unwrap();
        assert_eq!(g.node_count(), 64);
        let interior = (0..g.node_count())
            .filter(|&n| {
                let [i, j] = g.node_multi_index(n);
                (1..7).contains(&i) && (1..7).contains(&j)
            })
            .count();
        assert_eq!(interior, 36);
        assert_eq!(g.dof_count(), interior);
        for k in 0..g.dof_count() {
            assert_eq!(g.dof_of_node(g.node_of_dof(k)), Some(k));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid::new(3, 8, 1.0, Boundary::Dirichlet).is_err());
        assert!(Grid::new(1, 2, 1.0, Boundary::Dirichlet).is_err());
        assert!(Grid::new(1, 8, 0.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 8, -1.0, Boundary::Periodic).is_err());
    }
}
