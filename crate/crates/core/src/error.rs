use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inadmissible parameters: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("divergence after {iterations} iterations: {reason}")]
    Divergence { iterations: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
