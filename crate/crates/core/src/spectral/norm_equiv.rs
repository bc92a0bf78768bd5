use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{BesselPotential, ScalarMap, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::problem::Problem;

/// A test function described independently of the grid resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-|x - center|² / width²)`
    Bump { center: Point, width: f64 },
    /// The `k`-th eigenvector (ascending eigenvalue) of the operator under test.
    Mode { index: usize },
}

impl TestFunction {
    pub fn realize(&self, grid: &Grid, dec: &SpectralDecomposition) -> Result<DVector<f64>> {
        match self {
            TestFunction::Bump { center, width } => Ok(grid.sample(|x| {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (width * width)).exp()
            })),
            TestFunction::Mode { index } => {
                if *index >= dec.dof_count() {
                    return Err(Error::InvalidArgument(format!(
                        "mode {index} out of range for {} DOFs",
                        dec.dof_count()
                    )));
                }
                Ok(dec.eigenvectors().column(*index).into_owned())
            }
        }
    }
}

/// Seeded random bumps inside the middle half of the box plus the lowest `modes` eigenvectors.
pub fn standard_test_set(dim: usize, half_length: f64, seed: u64, bumps: usize, modes: usize) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(bumps + modes);
    for _ in 0..bumps {
        let mut center = [0.0; 2];
        for c in center.iter_mut().take(dim) {
            *c = rng.random_range(-0.5 * half_length..0.5 * half_length);
        }
        let width = half_length * rng.random_range(0.08..0.25);
        out.push(TestFunction::Bump { center, width });
    }
    out.extend((0..modes).map(|index| TestFunction::Mode { index }));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEquivalenceReport {
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub refinement_drift: Option<f64>,
    pub n_samples: usize,
}

/// `(‖f‖ + ‖L^α f‖) / ‖(1 - Δ_h)^α f‖` for one test function.
pub fn equivalence_ratio(
    dec: &SpectralDecomposition,
    bessel: &BesselPotential,
    alpha: f64,
    f: &DVector<f64>,
) -> Result<f64> {
    if f.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("zero test function".into()));
    }
    let grid = bessel.grid();
    let lf = dec.apply_real(&ScalarMap::Power(alpha), f)?;
    let jf = bessel.apply(2.0 * alpha, f)?;
    Ok((grid.norm(f) + grid.norm(&lf)) / grid.norm(&jf))
}

pub fn norm_equivalence(
    dec: &SpectralDecomposition,
    bessel: &BesselPotential,
    alpha: f64,
    tests: &[DVector<f64>],
) -> Result<NormEquivalenceReport> {
    if tests.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in tests {
        let r = equivalence_ratio(dec, bessel, alpha, f)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(NormEquivalenceReport {
        alpha,
        lambda_min: dec.lambda_min(),
        lambda_max: dec.lambda_max(),
        ratio_min: lo,
        ratio_max: hi,
        refinement_drift: None,
        n_samples: tests.len(),
    })
}

/// Report on `problem` with the drift against the same test set at doubled `N`.
pub fn norm_equivalence_refined(
    problem: &Problem,
    alpha: f64,
    tests: &[TestFunction],
) -> Result<NormEquivalenceReport> {
    let run = |p: &Problem| -> Result<NormEquivalenceReport> {
        let setup = p.build()?;
        let bessel = BesselPotential::new(&setup.grid)?;
        let samples = tests
            .iter()
            .map(|t| t.realize(&setup.grid, &setup.decomposition))
            .collect::<Result<Vec<_>>>()?;
        norm_equivalence(&setup.decomposition, &bessel, alpha, &samples)
    };
    let mut coarse = run(problem)?;
    let fine = run(&problem.refined())?;
    coarse.refinement_drift = Some(bracket_drift(&coarse, &fine));
    Ok(coarse)
}

/// Largest relative change of the bracket endpoints.
pub fn bracket_drift(coarse: &NormEquivalenceReport, fine: &NormEquivalenceReport) -> f64 {
    let lo = (fine.ratio_min - coarse.ratio_min).abs() / coarse.ratio_min;
    let hi = (fine.ratio_max - coarse.ratio_max).abs() / coarse.ratio_max;
    lo.max(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientParams;
    use crate::grid::Boundary;

    #[test]
    fn alpha_zero_ratio_is_two() {
        let p = Problem::new(1, 24, 4.0, Boundary::Dirichlet, CoefficientParams::Identity);
        let s = p.build().unwrap();
        let j = BesselPotential::new(&s.grid).unwrap();
        let tests: Vec<_> = standard_test_set(1, 4.0, 3, 4, 3)
            .iter()
            .map(|t| t.realize(&s.grid, &s.decomposition).unwrap())
            .collect();
        let r = norm_equivalence(&s.decomposition, &j, 0.0, &tests).unwrap();
        assert!((r.ratio_min - 2.0).abs() < 1e-12 && (r.ratio_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_test_function_rejected() {
        let p = Problem::new(1, 8, 1.0, Boundary::Periodic, CoefficientParams::Identity);
        let s = p.build().unwrap();
        let j = BesselPotential::new(&s.grid).unwrap();
        let zero = DVector::zeros(s.grid.dof_count());
        assert!(matches!(
            norm_equivalence(&s.decomposition, &j, 0.5, &[zero]),
            Err(Error::Degenerate(_))
        ));
        assert!(norm_equivalence(&s.decomposition, &j, 0.5, &[]).is_err());
    }

    #[test]
    fn test_set_is_seeded() {
        assert_eq!(standard_test_set(2, 3.0, 9, 5, 2), standard_test_set(2, 3.0, 9, 5, 2));
        assert_ne!(standard_test_set(2, 3.0, 9, 5, 2), standard_test_set(2, 3.0, 10, 5, 2));
    }
}
