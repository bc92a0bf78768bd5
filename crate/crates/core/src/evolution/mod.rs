//! Time stepping for `i u_t + L^α u + P(u) = 0` by Picard iteration of the Duhamel
//! formula, and for `u_t = -εL²u + iL^α u + Q(u, ∇u)` by an exponential trapezoid scheme.

mod kato_ponce;
mod nonlinearity;
mod picard;
mod trajectory;
mod viscous;

pub use kato_ponce::{kato_ponce_check, kato_ponce_sweep, KatoPonceSweep};
pub use nonlinearity::{centered_gradient, Nonlinearity, NonlinearityKind, Term};
pub use picard::{estimate_t_star, measure_c_est, picard_solve, t_star_from_norm, PicardOptions};
pub use trajectory::{l2_norm, modal_norm, MonitorRow, NormKind, SobolevMonitor, Trajectory};
pub use viscous::{fit_through_origin, viscosity_convergence, viscous_solve, ViscosityConvergence, ViscousOptions};
