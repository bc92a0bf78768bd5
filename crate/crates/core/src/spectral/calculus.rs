use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

type CustomFn = dyn Fn(f64) -> Complex64 + Send + Sync;

/// A bounded user-supplied scalar function of the spectral variable.
#[derive(Clone)]
pub struct CustomMap {
    pub name: String,
    pub real: bool,
    pub f: Arc<CustomFn>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomMap({})", self.name)
    }
}

/// Scalar functions of `λ ≥ 0` that the functional calculus can lift to `g(L)`.
#[derive(Debug, Clone)]
pub enum ScalarMap {
    /// `1`, the identity operator.
    One,
    /// `λ`, reproducing `L` itself.
    Identity,
    /// `λ^α`
    Power(f64),
    /// `e^{-tλ}`
    Heat {
        t: f64,
    },
    /// `e^{itλ^α}`
    UnitaryFrac {
        t: f64,
        alpha: f64,
    },
    /// `e^{t(-ελ² + iλ^α)}`
    Viscous {
        eps: f64,
        t: f64,
        alpha: f64,
    },
    /// `λ e^{-εtλ²} e^{itλ^α}`
    ViscousGenerator {
        eps: f64,
        t: f64,
        alpha: f64,
    },
    /// `(1 + λ)^α`, defined for every real `α`.
    ShiftedPower(f64),
    Custom(CustomMap),
}

impl ScalarMap {
    pub fn custom(name: impl Into<String>, real: bool, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        ScalarMap::Custom(CustomMap {
            name: name.into(),
            real,
            f: Arc::new(f),
        })
    }

    pub fn name(&self) -> String {
        match self {
            ScalarMap::One => "one".into(),
            ScalarMap::Identity => "identity".into(),
            ScalarMap::Power(a) => format!("power({a})"),
            ScalarMap::Heat { t } => format!("heat({t})"),
            ScalarMap::UnitaryFrac { t, alpha } => format!("unitary_frac({t}, {alpha})"),
            ScalarMap::Viscous { eps, t, alpha } => format!("viscous({eps}, {t}, {alpha})"),
            ScalarMap::ViscousGenerator { eps, t, alpha } => format!("viscous_generator({eps}, {t}, {alpha})"),
            ScalarMap::ShiftedPower(a) => format!("shifted_power({a})"),
            ScalarMap::Custom(c) => c.name.clone(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            ScalarMap::One
            | ScalarMap::Identity
            | ScalarMap::Power(_)
            | ScalarMap::Heat { .. }
            | ScalarMap::ShiftedPower(_) => true,
            ScalarMap::UnitaryFrac { t, .. } => *t == 0.0,
            ScalarMap::Viscous { t, .. } | ScalarMap::ViscousGenerator { t, .. } => *t == 0.0,
            ScalarMap::Custom(c) => c.real,
        }
    }

    /// Evaluates the map at a (nonnegative) eigenvalue.
    pub fn eval(&self, lambda: f64) -> Result<Complex64> {
        let l = lambda.max(0.0);
        let value = match self {
            ScalarMap::One => Complex64::from(1.0),
            ScalarMap::Identity => Complex64::from(l),
            ScalarMap::Power(a) => {
                if *a < 0.0 && l == 0.0 {
                    return Err(Error::Singular {
                        map: self.name(),
                        eigenvalue: lambda,
                    });
                }
                Complex64::from(pow(l, *a))
            }
            ScalarMap::Heat { t } => Complex64::from((-t * l).exp()),
            ScalarMap::UnitaryFrac { t, alpha } => Complex64::from_polar(1.0, t * pow(l, *alpha)),
            ScalarMap::Viscous { eps, t, alpha } => Complex64::from_polar((-eps * t * l * l).exp(), t * pow(l, *alpha)),
            ScalarMap::ViscousGenerator { eps, t, alpha } => {
                Complex64::from_polar(l * (-eps * t * l * l).exp(), t * pow(l, *alpha))
            }
            ScalarMap::ShiftedPower(a) => Complex64::from((1.0 + l).powf(*a)),
            ScalarMap::Custom(c) => (c.f)(l),
        };
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::Singular {
                map: self.name(),
                eigenvalue: lambda,
            });
        }
        Ok(value)
    }
}

/// `λ^α` with `0^0 = 1`.
fn pow(l: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        l.powf(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroth_power_of_zero_is_one() {
        assert_eq!(ScalarMap::Power(0.0).eval(0.0).unwrap(), Complex64::from(1.0));
        assert_eq!(ScalarMap::Power(0.5).eval(0.0).unwrap(), Complex64::from(0.0));
    }

    #[test]
    fn roundoff_negative_eigenvalues_are_clamped() {
        assert_eq!(ScalarMap::Power(0.5).eval(-1e-15).unwrap(), Complex64::from(0.0));
    }

    #[test]
    fn unbounded_custom_map_is_singular() {
        let m = ScalarMap::custom("inverse", true, |l| Complex64::from(1.0 / l));
        assert!(matches!(m.eval(0.0), Err(Error::Singular { .. })));
        assert!(m.eval(2.0).is_ok());
    }

    #[test]
    fn reality() {
        assert!(ScalarMap::Heat { t: 1.0 }.is_real());
        assert!(!ScalarMap::UnitaryFrac { t: 1.0, alpha: 0.5 }.is_real());
        assert!(ScalarMap::UnitaryFrac { t: 0.0, alpha: 0.5 }.is_real());
    }
}
