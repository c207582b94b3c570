use thiserror::Error;

use crate::oscillatory::QuadResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Intermediate scaling left the representable range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Adaptive quadrature ran out of panel budget; carries the best estimate.
    #[error("quadrature did not converge after {} panels (estimate {} ± {})", best.panels, best.value, best.est_error)]
    NonConvergence { best: QuadResult },

    /// A hypothesis required by an estimate failed on the validation grid.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
