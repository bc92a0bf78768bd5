use nalgebra::DVector;
use num_complex::Complex64;

use super::{ScalarMap, SpectralDecomposition};
use crate::assemble::assemble;
use crate::coeff::{make_coefficients, CoefficientParams};
use crate::error::Result;
use crate::grid::Grid;

/// `J^s = (1 - Δ_h)^{s/2}` built from the discrete Laplacian on the same grid and
/// boundary as the operators it is compared against.
#[derive(Debug, Clone)]
pub struct BesselPotential {
    laplacian: SpectralDecomposition,
}

impl BesselPotential {
    pub fn new(grid: &Grid) -> Result<Self> {
        let field = make_coefficients(grid, &CoefficientParams::Identity)?;
        let op = assemble(grid, &field)?;
        Ok(BesselPotential {
            laplacian: super::eigendecompose(&op)?,
        })
    }

    pub fn laplacian(&self) -> &SpectralDecomposition {
        &self.laplacian
    }

    pub fn grid(&self) -> &Grid {
        self.laplacian.grid().expect("built from a grid")
    }

    /// `(1 - Δ_h)^{s/2} f`.
    pub fn apply(&self, s: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.laplacian.apply_real(&ScalarMap::ShiftedPower(0.5 * s), f)
    }

    pub fn apply_complex(&self, s: f64, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.laplacian.apply(&ScalarMap::ShiftedPower(0.5 * s), f)
    }

    /// Discrete Sobolev norm `‖J^s f‖₂` (cell-volume weighted).
    pub fn sobolev_norm(&self, s: f64, f: &DVector<f64>) -> Result<f64> {
        Ok(self.grid().norm(&self.apply(s, f)?))
    }

    /// `‖J^s f‖₂` for a complex state, evaluated in the Laplacian's eigenbasis.
    pub fn sobolev_norm_complex(&self, s: f64, f: &DVector<Complex64>) -> Result<f64> {
        let modes = self.laplacian.to_modes_complex(f)?;
        let mut acc = 0.0;
        for (i, c) in modes.iter().enumerate() {
            let w = (1.0 + self.laplacian.effective_eigenvalue(i)).powf(s);
            acc += w * c.norm_sqr();
        }
        Ok((self.grid().cell_volume() * acc).sqrt())
    }
}

/// `bessel_apply`: `(1 - Δ_h)^{s/2} f` on `grid`.
pub fn bessel_apply(grid: &Grid, s: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
    BesselPotential::new(grid)?.apply(s, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn order_zero_and_two() {
        let g = Grid::new(1, 17, 2.0, Boundary::Dirichlet).unwrap();
        let j = BesselPotential::new(&g).unwrap();
        let f = g.sample(|x| (x[0] * 1.3).sin() + 0.2);
        let same = j.apply(0.0, &f).unwrap();
        assert!((&same - &f).amax() < 1e-14);
        let two = j.apply(2.0, &f).unwrap();
        let direct = &f + j.laplacian().matrix() * &f;
        assert!((&two - &direct).norm() <= 1e-12 * direct.norm());
        let back = j.apply(2.0, &j.apply(-2.0, &f).unwrap()).unwrap();
        assert!((&back - &f).norm() <= 1e-10 * f.norm());
    }
}
