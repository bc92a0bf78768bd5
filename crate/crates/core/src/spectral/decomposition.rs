use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::ScalarMap;
use crate::assemble::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Default cap on the number of unknowns for the dense eigensolve.
pub const DEFAULT_DOF_CAP: usize = 4096;

/// Relative slack allowed below zero for the smallest eigenvalue.
pub const NEGATIVITY_SLACK: f64 = 1e-10;

/// Eigenpairs of a symmetric operator, eigenvalues ascending, eigenvectors in columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    matrix: Arc<DMatrix<f64>>,
    grid: Option<Grid>,
}

/// Residuals of the decomposition invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionCheck {
    pub orthonormality: f64,
    pub reconstruction: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl DecompositionCheck {
    pub fn passes(&self) -> bool {
        let scale = self.lambda_max.abs().max(self.lambda_min.abs());
        self.orthonormality <= 1e-10
            && self.reconstruction <= 1e-8 * scale.max(f64::MIN_POSITIVE)
            && self.lambda_min >= -NEGATIVITY_SLACK * self.lambda_max.abs()
    }
}

pub fn eigendecompose(op: &DiscreteOperator) -> Result<SpectralDecomposition> {
    eigendecompose_with_cap(op, DEFAULT_DOF_CAP)
}

pub fn eigendecompose_with_cap(op: &DiscreteOperator, cap: usize) -> Result<SpectralDecomposition> {
    let dofs = op.dof_count();
    if dofs > cap {
        return Err(Error::TooLarge { dofs, cap });
    }
    SpectralDecomposition::from_symmetric(op.matrix().clone(), Some(op.grid().clone()))
}

impl SpectralDecomposition {
    /// Decomposes any symmetric nonnegative matrix.
    pub fn from_symmetric(matrix: DMatrix<f64>, grid: Option<Grid>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.ncols(),
            });
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        let dec = SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            matrix: Arc::new(matrix),
            grid,
        };
        let (min, max) = (dec.lambda_min(), dec.lambda_max());
        if min < -NEGATIVITY_SLACK * max.abs() {
            return Err(Error::NotNonnegative { min, max });
        }
        Ok(dec)
    }

    /// A diagonal operator with the given spectrum and the standard basis as eigenvectors.
    pub fn from_diagonal(eigenvalues: &[f64]) -> Result<Self> {
        let d = DVector::from_column_slice(eigenvalues);
        SpectralDecomposition::from_symmetric(DMatrix::from_diagonal(&d), None)
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> Arc<DMatrix<f64>> {
        Arc::clone(&self.matrix)
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn require_grid(&self) -> Result<&Grid> {
        self.grid.as_ref().ok_or(Error::MissingGrid)
    }

    pub fn dof_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Eigenvalues at or below this are treated as exact zeros by the functional calculus.
    pub fn zero_threshold(&self) -> f64 {
        NEGATIVITY_SLACK * self.lambda_max().abs()
    }

    /// Eigenvalue as seen by scalar maps: roundoff-level values snapped to zero.
    pub fn effective_eigenvalue(&self, i: usize) -> f64 {
        let l = self.eigenvalues[i];
        if l <= self.zero_threshold() {
            0.0
        } else {
            l
        }
    }

    pub fn verify(&self) -> DecompositionCheck {
        let n = self.dof_count();
        let v = &self.eigenvectors;
        let gram = v.transpose() * v;
        let orthonormality = (&gram - DMatrix::<f64>::identity(n, n)).amax();
        let recon = v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose();
        let reconstruction = (&recon - &*self.matrix).amax();
        DecompositionCheck {
            orthonormality,
            reconstruction,
            lambda_min: self.lambda_min(),
            lambda_max: self.lambda_max(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: self.dof_count(),
                got: len,
            });
        }
        Ok(())
    }

    /// Modal coefficients `Vᵀ f`.
    pub fn to_modes(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(f.len())?;
        Ok(self.eigenvectors.tr_mul(f))
    }

    pub fn from_modes(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * c
    }

    pub fn to_modes_complex(&self, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check_len(f.len())?;
        let re = self.eigenvectors.tr_mul(&f.map(|z| z.re));
        let im = self.eigenvectors.tr_mul(&f.map(|z| z.im));
        Ok(DVector::from_iterator(
            re.len(),
            re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)),
        ))
    }

    pub fn from_modes_complex(&self, c: &DVector<Complex64>) -> DVector<Complex64> {
        let re = &self.eigenvectors * c.map(|z| z.re);
        let im = &self.eigenvectors * c.map(|z| z.im);
        DVector::from_iterator(re.len(), re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)))
    }

    /// `map(Λ)` over the whole spectrum.
    pub fn multipliers(&self, map: &ScalarMap) -> Result<Vec<Complex64>> {
        (0..self.dof_count())
            .map(|i| map.eval(self.effective_eigenvalue(i)))
            .collect()
    }

    pub fn real_multipliers(&self, map: &ScalarMap) -> Result<Vec<f64>> {
        if !map.is_real() {
            return Err(Error::ComplexMap { map: map.name() });
        }
        Ok(self.multipliers(map)?.into_iter().map(|z| z.re).collect())
    }

    /// `V map(Λ) Vᵀ f` for a complex state.
    pub fn apply(&self, map: &ScalarMap, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let m = self.multipliers(map)?;
        let mut c = self.to_modes_complex(f)?;
        for (ci, mi) in c.iter_mut().zip(&m) {
            *ci *= mi;
        }
        Ok(self.from_modes_complex(&c))
    }

    /// `V map(Λ) Vᵀ f` for a real map and a real state.
    pub fn apply_real(&self, map: &ScalarMap, f: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.real_multipliers(map)?;
        let mut c = self.to_modes(f)?;
        for (ci, mi) in c.iter_mut().zip(&m) {
            *ci *= mi;
        }
        Ok(self.from_modes(&c))
    }

    /// Operator 2-norm of `map(L)`; `L` is normal so this is `max |map(λ)|`.
    pub fn operator_norm(&self, map: &ScalarMap) -> Result<f64> {
        Ok(self.multipliers(map)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// `apply_function`: `V map(Λ) Vᵀ f`.
pub fn apply_function(
    dec: &SpectralDecomposition,
    map: &ScalarMap,
    f: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    dec.apply(map, f)
}

/// `L^α f` for `α ≥ 0`.
pub fn fractional_power(dec: &SpectralDecomposition, alpha: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fractional power needs alpha >= 0, got {alpha}; use the shifted power (L+1)^alpha for inverses"
        )));
    }
    dec.apply_real(&ScalarMap::Power(alpha), f)
}

/// `e^{itL^α} f`.
pub fn unitary_propagate(
    dec: &SpectralDecomposition,
    alpha: f64,
    t: f64,
    f: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    dec.apply(&ScalarMap::UnitaryFrac { t, alpha }, f)
}

/// `e^{t(-εL² + iL^α)} f` for `ε, t ≥ 0`.
pub fn viscous_propagate(
    dec: &SpectralDecomposition,
    alpha: f64,
    eps: f64,
    t: f64,
    f: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    if !(eps >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "viscous propagator needs eps >= 0 and t >= 0, got eps={eps}, t={t}"
        )));
    }
    dec.apply(&ScalarMap::Viscous { eps, t, alpha }, f)
}

/// `(2 e ε t)^{-1/2}`, the supremum of `λ e^{-εtλ²}` over `λ ≥ 0`.
pub fn smoothing_bound(eps: f64, t: f64) -> f64 {
    (2.0 * std::f64::consts::E * eps * t).powf(-0.5)
}
