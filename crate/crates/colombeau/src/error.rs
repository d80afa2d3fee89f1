use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A caller violated an API contract (wrong dimension, mismatched
    /// formalism tags, bad parameter ranges, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// An evaluation was requested outside the admissible region.
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid is too coarse to meet the requested tolerance.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A pointwise evaluation produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A fixed-point iteration failed to converge.
    #[error("iteration error: {0}")]
    Iteration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }

    pub fn evaluation(msg: impl Into<String>) -> Self {
        Error::Evaluation(msg.into())
    }

    pub fn iteration(msg: impl Into<String>) -> Self {
        Error::Iteration(msg.into())
    }
}
