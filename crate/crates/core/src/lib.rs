//! Spectral toolkit for fractional powers `L^α` of variable-coefficient elliptic
//! operators `L v = -∂_k(a_jk ∂_j v) + c v` on uniform 1D/2D grids.
//!
//! The pipeline is: build a [`grid::Grid`] and a [`coeff::CoefficientField`], assemble
//! the flux-form [`assemble::DiscreteOperator`], diagonalize it once with
//! [`spectral::eigendecompose`], then lift scalar functions of the spectrum to
//! operators: fractional powers, heat and Schrödinger propagators, the extension
//! `U(x, y)`, and the time-stepping schemes in [`evolution`].

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assemble;
pub mod cli;
pub mod coeff;
pub mod error;
pub mod evolution;
pub mod extension;
pub mod grid;
pub mod problem;
pub mod spectral;
pub mod ucprobe;

pub use error::{Error, Result};
