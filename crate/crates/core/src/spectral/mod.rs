//! Dense symmetric eigendecomposition and the matrix functional calculus built on it.

mod bessel;
mod calculus;
mod decomposition;
mod norm_equiv;

pub use bessel::{bessel_apply, BesselPotential};
pub use calculus::{CustomMap, ScalarMap};
pub use decomposition::{
    apply_function, eigendecompose, eigendecompose_with_cap, fractional_power, smoothing_bound, unitary_propagate,
    viscous_propagate, DecompositionCheck, SpectralDecomposition, DEFAULT_DOF_CAP, NEGATIVITY_SLACK,
};
pub use norm_equiv::{
    bracket_drift, equivalence_ratio, norm_equivalence, norm_equivalence_refined, standard_test_set,
    NormEquivalenceReport, TestFunction,
};
