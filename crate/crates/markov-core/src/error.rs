use thiserror::Error;

/// Errors raised by the numeric layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("matrix is singular{0}")]
    Singular(String),
    #[error("negative time {0} not allowed")]
    NegativeTime(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
