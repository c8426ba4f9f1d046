use thiserror::Error;

use crate::states::Basis;

/// Errors produced by the chain simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Site index outside `1..=N`.
    #[error("site index {index} out of range 1..={n}")]
    SiteIndex { index: usize, n: usize },

    /// State index outside its family's valid range.
    #[error("state index m={m} out of range {min}..={max}")]
    StateIndex { m: usize, min: usize, max: usize },

    /// Argument outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// The shift kernel diverges at zero separation; the two-level model
    /// does not resolve the physics there.
    #[error("shift kernel G diverges at xi = 0")]
    KernelDivergence,

    /// A vector tagged with the wrong basis was passed in.
    #[error("basis mismatch: expected {expected:?}, got {got:?}")]
    BasisMismatch { expected: Basis, got: Basis },

    /// The eigensolver did not converge or returned unusable output.
    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    /// Adaptive integrator drove the step size below its floor.
    #[error("ODE step size underflow at t = {t}: {detail}")]
    StepSizeUnderflow { t: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
