//! Numerical laboratory for time-scaling of measurement precision under
//! nonlinear quantum scrambling.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: truncated single-mode Fock space and its banded operators.
//! - [`dynamics`]: rotating-frame Hamiltonians and pure-state evolution,
//!   including an exact interaction-picture propagator for `λX + f(P)`.
//! - [`metrology`]: quantum Fisher information and error propagation for the
//!   optimal measurement.
//! - [`analytic`]: closed-form predictions used as cross-check oracles.
//! - [`langevin`]: c-number stochastic trajectories for the friction and
//!   cavity models.
//! - [`scaling`]: power-law and exponential fits.
//! - [`runner`]: JSON-configured experiments writing CSV + JSON sidecars.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod langevin;
pub mod metrology;
pub mod runner;
pub mod scaling;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
