//! The extension `U(x, y)` of a state into one extra variable, the recovery of `L^α u`
//! from its weighted normal derivative at `y = 0`, and the energy, doubling and weak-form
//! measurements on the sampled field.

mod field;
mod measures;
mod quadrature;

pub use field::{
    conormal_recover, extend, extend_at, ConormalConstant, ExtensionField, ExtensionResolution, Ladder, RECOVERY_TOL,
};
pub use measures::{
    conormal_from_values, doubling_ratio, energy_report, gradient_energy, half_ball_mass, standard_weak_tests,
    weak_residual, EnergyReport, WeakResidual, WeakTestFunction,
};
pub use quadrature::{mode_values, ModeValues, QuadratureRule, CONVERGENCE_FLOOR, CONVERGENCE_TOL, DEFAULT_INTERVALS};
