use thiserror::Error;

/// Errors raised by the numerical core and the stream tooling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("mode solver did not converge after {iterations} iterations (residual {residual:e})")]
    ModeNotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown classifier id `{0}`")]
    UnknownSource(String),

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
