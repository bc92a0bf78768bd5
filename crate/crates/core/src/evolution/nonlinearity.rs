use nalgebra::DVector;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `P(z, z̄)`
    Polynomial,
    /// `Q(z, z̄, ∇z, ∇z̄)`
    Gradient,
}

/// One monomial `coeff · z^{p_z} z̄^{p_zbar} Π (∂_j z)^{p_dz_j} Π (∂_j z̄)^{p_dzbar_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    /// `[p_z, p_zbar]` or `[p_z, p_zbar, p_dz.., p_dzbar..]`.
    pub powers: Vec<u32>,
}

impl Term {
    pub fn new(coeff: Complex64, powers: Vec<u32>) -> Self {
        Term { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, args: &[Complex64]) -> Complex64 {
        let mut v = self.coeff;
        for (a, &p) in args.iter().zip(&self.powers) {
            if p > 0 {
                v *= a.powu(p);
            }
        }
        v
    }

    /// `∂/∂ args[slot]` of the monomial.
    fn eval_partial(&self, args: &[Complex64], slot: usize) -> Complex64 {
        let p = self.powers[slot];
        if p == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut v = self.coeff * p as f64;
        for (k, (a, &q)) in args.iter().zip(&self.powers).enumerate() {
            let e = if k == slot { q - 1 } else { q };
            if e > 0 {
                v *= a.powu(e);
            }
        }
        v
    }
}

/// A polynomial nonlinearity with every term of total degree in `[n1, n2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    dim: usize,
    terms: Vec<Term>,
    n1: u32,
    n2: u32,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, dim: usize, terms: Vec<Term>, n1: u32, n2: u32) -> Result<Self> {
        if !(2 <= n1 && n1 <= n2) {
            return Err(Error::InvalidNonlinearity(format!(
                "degrees need 2 <= N1 <= N2, got N1={n1}, N2={n2}"
            )));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidNonlinearity(format!("dimension {dim} not supported")));
        }
        let arity = match kind {
            NonlinearityKind::Polynomial => 2,
            NonlinearityKind::Gradient => 2 + 2 * dim,
        };
        for (i, t) in terms.iter().enumerate() {
            if t.powers.len() != arity {
                return Err(Error::InvalidNonlinearity(format!(
                    "term {i} has {} powers, expected {arity}",
                    t.powers.len()
                )));
            }
            let d = t.degree();
            if d < n1 || d > n2 {
                return Err(Error::InvalidNonlinearity(format!(
                    "term {i} has degree {d}, outside [{n1}, {n2}]"
                )));
            }
        }
        Ok(Nonlinearity {
            kind,
            dim,
            terms,
            n1,
            n2,
        })
    }

    pub fn polynomial(terms: Vec<Term>, n1: u32, n2: u32) -> Result<Self> {
        Nonlinearity::new(NonlinearityKind::Polynomial, 1, terms, n1, n2)
    }

    pub fn gradient(dim: usize, terms: Vec<Term>, n1: u32, n2: u32) -> Result<Self> {
        Nonlinearity::new(NonlinearityKind::Gradient, dim, terms, n1, n2)
    }

    /// `P ≡ 0`.
    pub fn zero(kind: NonlinearityKind, dim: usize) -> Self {
        Nonlinearity {
            kind,
            dim,
            terms: vec![],
            n1: 2,
            n2: 2,
        }
    }

    /// `coeff |z|^{2k} z`.
    pub fn power_law(coeff: Complex64, k: u32) -> Self {
        let d = 2 * k + 1;
        Nonlinearity::polynomial(vec![Term::new(coeff, vec![k + 1, k])], d.max(2), d.max(2)).expect("valid degree")
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degrees(&self) -> (u32, u32) {
        (self.n1, self.n2)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == Complex64::new(0.0, 0.0))
    }

    fn uses_gradients(&self) -> bool {
        self.kind == NonlinearityKind::Gradient && self.terms.iter().any(|t| t.powers[2..].iter().any(|&p| p > 0))
    }

    /// Point arguments `[z, z̄, ∂z.., ∂z̄..]` at every DOF.
    fn arguments(&self, grid: Option<&Grid>, u: &DVector<Complex64>) -> Result<Vec<Vec<Complex64>>> {
        let grads = if self.uses_gradients() {
            let grid = grid.ok_or(Error::MissingGrid)?;
            if grid.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: grid.dim(),
                });
            }
            Some(centered_gradient(grid, u))
        } else {
            None
        };
        Ok((0..u.len())
            .map(|i| {
                let z = u[i];
                let mut a = vec![z, z.conj()];
                if self.kind == NonlinearityKind::Gradient {
                    for j in 0..self.dim {
                        a.push(grads.as_ref().map_or(Complex64::new(0.0, 0.0), |g| g[j][i]));
                    }
                    for j in 0..self.dim {
                        a.push(grads.as_ref().map_or(Complex64::new(0.0, 0.0), |g| g[j][i].conj()));
                    }
                }
                a
            })
            .collect())
    }

    /// Pointwise evaluation on grid values (no dealiasing).
    pub fn eval(&self, grid: Option<&Grid>, u: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if self.terms.is_empty() {
            return Ok(DVector::zeros(u.len()));
        }
        let args = self.arguments(grid, u)?;
        Ok(DVector::from_iterator(
            u.len(),
            args.iter().map(|a| self.terms.iter().map(|t| t.eval(a)).sum()),
        ))
    }

    /// `∂Q/∂(∂_j z)` at every DOF, from the symbolic derivative of each monomial.
    pub fn gradient_partial(
        &self,
        grid: Option<&Grid>,
        u: &DVector<Complex64>,
        j: usize,
    ) -> Result<DVector<Complex64>> {
        if self.kind != NonlinearityKind::Gradient || j >= self.dim {
            return Err(Error::InvalidNonlinearity(
                "gradient partial needs a gradient nonlinearity".into(),
            ));
        }
        let args = self.arguments(grid, u)?;
        Ok(DVector::from_iterator(
            u.len(),
            args.iter()
                .map(|a| self.terms.iter().map(|t| t.eval_partial(a, 2 + j)).sum()),
        ))
    }

    /// Largest `|Im ∂Q/∂(∂_j z)|` over seeded random states; the energy hypothesis asks
    /// for this to vanish.
    pub fn energy_hypothesis_defect(&self, grid: &Grid, samples: usize, seed: u64) -> Result<f64> {
        if self.kind != NonlinearityKind::Gradient {
            return Ok(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let u = DVector::from_fn(grid.dof_count(), |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            for j in 0..self.dim {
                let d = self.gradient_partial(Some(grid), &u, j)?;
                worst = d.iter().map(|z| z.im.abs()).fold(worst, f64::max);
            }
        }
        Ok(worst)
    }

    pub fn satisfies_energy_hypothesis(&self, grid: &Grid) -> Result<bool> {
        Ok(self.energy_hypothesis_defect(grid, 8, 0)? <= 1e-10)
    }
}

/// Centered differences `(u_{i+1} - u_{i-1}) / 2h` per axis, zero outside Dirichlet boxes.
pub fn centered_gradient(grid: &Grid, u: &DVector<Complex64>) -> Vec<DVector<Complex64>> {
    let nodes = grid.to_nodes(u.as_slice());
    let h = grid.spacing();
    (0..grid.dim())
        .map(|axis| {
            DVector::from_fn(u.len(), |i, _| {
                let node = grid.node_of_dof(i);
                let at = |step| {
                    grid.neighbor(node, axis, step)
                        .map_or(Complex64::new(0.0, 0.0), |m| nodes[m])
                };
                (at(1) - at(-1)) / (2.0 * h)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn degrees_are_enforced() {
        assert!(Nonlinearity::polynomial(vec![Term::new(c(1.0), vec![1, 0])], 2, 3).is_err());
        assert!(Nonlinearity::polynomial(vec![Term::new(c(1.0), vec![2, 1])], 2, 3).is_ok());
        assert!(Nonlinearity::polynomial(vec![], 1, 3).is_err());
    }

    #[test]
    fn cubic_power_law() {
        let p = Nonlinearity::power_law(c(1.0), 1);
        let u = DVector::from_element(1, Complex64::new(0.6, 0.8));
        let v = p.eval(None, &u).unwrap();
        assert!((v[0] - u[0]).norm() < 1e-15);
    }

    #[test]
    fn energy_hypothesis_examples() {
        let g = Grid::new(1, 16, 1.0, Boundary::Periodic).unwrap();
        // (u + ū) ∂u
        let good = Nonlinearity::gradient(
            1,
            vec![Term::new(c(1.0), vec![1, 0, 1, 0]), Term::new(c(1.0), vec![0, 1, 1, 0])],
            2,
            2,
        )
        .unwrap();
        // u ∂u
        let bad = Nonlinearity::gradient(1, vec![Term::new(c(1.0), vec![1, 0, 1, 0])], 2, 2).unwrap();
        assert!(good.satisfies_energy_hypothesis(&g).unwrap());
        assert!(!bad.satisfies_energy_hypothesis(&g).unwrap());
    }

    #[test]
    fn gradient_of_periodic_sine() {
        let g = Grid::new(1, 64, std::f64::consts::PI, Boundary::Periodic).unwrap();
        let u = g.sample(|x| x[0].sin()).map(c);
        let d = centered_gradient(&g, &u);
        let h = g.spacing();
        for (i, di) in d[0].iter().enumerate() {
            let x = g.dof_position(i)[0];
            assert!((di.re - x.cos() * h.sin() / h).abs() < 1e-12);
        }
    }
}
