//! A grid description plus a coefficient description, buildable at any resolution.

use std::path::PathBuf;

use crate::assemble::{assemble, DiscreteOperator};
use crate::coeff::{load_table, make_coefficients, CoefficientField, CoefficientParams};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::spectral::{eigendecompose_with_cap, SpectralDecomposition, DEFAULT_DOF_CAP};

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    Params(CoefficientParams),
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    pub boundary: Boundary,
    pub coefficients: CoefficientSource,
    /// Constant added to `c(x)` after sampling.
    pub c_shift: f64,
    pub dof_cap: usize,
}

/// Everything derived from a [`Problem`] at one resolution.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub field: CoefficientField,
    pub operator: DiscreteOperator,
    pub decomposition: SpectralDecomposition,
}

impl Problem {
    pub fn new(dim: usize, n: usize, half_length: f64, boundary: Boundary, params: CoefficientParams) -> Self {
        Problem {
            dim,
            n,
            half_length,
            boundary,
            coefficients: CoefficientSource::Params(params),
            c_shift: 0.0,
            dof_cap: DEFAULT_DOF_CAP,
        }
    }

    pub fn with_n(&self, n: usize) -> Problem {
        Problem { n, ..self.clone() }
    }

    pub fn refined(&self) -> Problem {
        self.with_n(2 * self.n)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.half_length, self.boundary)
    }

    pub fn field(&self, grid: &Grid) -> Result<CoefficientField> {
        let field = match &self.coefficients {
            CoefficientSource::Params(CoefficientParams::Tabulated { a, .. })
                if a.len() != grid.node_count() * grid.dim().pow(2) =>
            {
                return Err(Error::InvalidParams(format!(
                    "tabulated coefficients cannot be resampled to {} nodes",
                    grid.node_count()
                )))
            }
            CoefficientSource::Params(p) => make_coefficients(grid, p)?,
            CoefficientSource::Table(path) => load_table(grid, path)?,
        };
        if self.c_shift != 0.0 {
            let shifted = field.with_c_shift(self.c_shift);
            shifted.validate(grid)?;
            return Ok(shifted);
        }
        Ok(field)
    }

    pub fn build(&self) -> Result<Setup> {
        let grid = self.grid()?;
        let field = self.field(&grid)?;
        let operator = assemble(&grid, &field)?;
        let decomposition = eigendecompose_with_cap(&operator, self.dof_cap)?;
        Ok(Setup {
            grid,
            field,
            operator,
            decomposition,
        })
    }
}
