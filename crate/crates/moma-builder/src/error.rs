use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("structure error: {0}")]
    Structure(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Numeric(#[from] markov_core::Error),
}

pub type Result<T> = std::result::Result<T, BuildError>;
