use thiserror::Error;

use crate::fock::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock cutoffs ({n_a}, {n_b}): each mode needs at least 2 levels")]
    InvalidCutoffs { n_a: usize, n_b: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation needs a joint two-mode state")]
    InvalidModeTag,

    #[error("truncation overflow in {mode:?} mode at t = {time:.3}: top-two-level population {mass:.3e}")]
    TruncationOverflow { mode: Mode, mass: f64, time: f64 },

    #[error("step size underflow at t = {time:.6} (h = {step:.3e})")]
    StepFailure { time: f64, step: f64 },

    #[error("steady-state system is singular: {0}")]
    SingularSystem(String),

    #[error("Liouvillian has an eigenvalue with positive real part {0:.3e}")]
    Unstable(f64),

    #[error("no convergence after {periods} periods (last relative change {last_change:.3e})")]
    NoConvergence { periods: usize, last_change: f64 },

    #[error("population {0:.3e} too small for a normalized correlation")]
    VanishingPopulation(f64),

    #[error("moment matrix is singular at the stability boundary (|det M| = {0:.3e})")]
    SingularAtThreshold(f64),

    #[error("drive exceeds the stability bound: E = {amplitude}, E_max = {bound}")]
    StabilityViolated { amplitude: f64, bound: f64 },

    #[error("correlation grid is not uniformly spaced")]
    NonUniformGrid,

    #[error("phase-space grid too small: Wigner norm {0:.4}")]
    GridTooSmall(f64),

    #[error("moment trajectory diverged at t = {0:.3}")]
    Divergence(f64),

    #[error("stability bound is unbounded for g = 0")]
    Unbounded,
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
