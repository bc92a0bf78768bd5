use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::BesselPotential;

/// `‖J^l(fg)‖₂ / (‖f‖_∞ ‖J^l g‖₂ + ‖g‖_∞ ‖J^l f‖₂)`, defined as 0 when `f` or `g` vanishes.
pub fn kato_ponce_check(bessel: &BesselPotential, l: f64, f: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Kato-Ponce order must be positive, got {l}"
        )));
    }
    let sup = |v: &DVector<f64>| v.amax();
    if sup(f) == 0.0 || sup(g) == 0.0 {
        return Ok(0.0);
    }
    let fg = f.component_mul(g);
    let lhs = bessel.sobolev_norm(l, &fg)?;
    let rhs = sup(f) * bessel.sobolev_norm(l, g)? + sup(g) * bessel.sobolev_norm(l, f)?;
    Ok(lhs / rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatoPonceSweep {
    pub l: f64,
    pub pairs: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Seeded random smooth pairs (sums of three Gaussian bumps); the maximum ratio is the
/// grid's empirical Kato-Ponce constant.
pub fn kato_ponce_sweep(bessel: &BesselPotential, l: f64, pairs: usize, seed: u64) -> Result<KatoPonceSweep> {
    let grid = bessel.grid();
    let x = grid.half_length();
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_smooth = |rng: &mut ChaCha8Rng| {
        let bumps: Vec<([f64; 2], f64, f64)> = (0..3)
            .map(|_| {
                let mut c = [0.0; 2];
                for v in c.iter_mut().take(dim) {
                    *v = rng.random_range(-0.5 * x..0.5 * x);
                }
                (c, x * rng.random_range(0.1..0.3), rng.random_range(-1.0..1.0))
            })
            .collect();
        grid.sample(|p| {
            bumps
                .iter()
                .map(|(c, w, a)| {
                    let r2: f64 = p.iter().zip(c).map(|(u, v)| (u - v) * (u - v)).sum();
                    a * (-r2 / (w * w)).exp()
                })
                .sum()
        })
    };
    let mut max: f64 = 0.0;
    let mut total = 0.0;
    for _ in 0..pairs {
        let f = random_smooth(&mut rng);
        let g = random_smooth(&mut rng);
        let r = kato_ponce_check(bessel, l, &f, &g)?;
        max = max.max(r);
        total += r;
    }
    Ok(KatoPonceSweep {
        l,
        pairs,
        max_ratio: max,
        mean_ratio: if pairs > 0 { total / pairs as f64 } else { 0.0 },
    })
}
