use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cost specification error: {0}")]
    Costs(String),
    #[error("maintenance construction error: {0}")]
    Maintenance(String),
    #[error(transparent)]
    Build(#[from] moma_builder::BuildError),
    #[error(transparent)]
    Numeric(#[from] markov_core::Error),
}

pub type Result<T> = std::result::Result<T, PolicyError>;
