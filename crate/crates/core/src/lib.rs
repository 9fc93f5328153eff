//! Numerical toolkit for a driven, damped optomechanical cavity: truncated
//! two-mode Fock space, Lindblad dynamics, steady states, photon statistics
//! and first/second-moment analytics.

pub mod error;
pub mod evolution;
pub mod fock;
pub mod liouvillian;
pub mod model;
pub mod moments;
mod ode;
pub mod statistics;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, Dims, FockCutoffs, Mode, QOperator, C64};
