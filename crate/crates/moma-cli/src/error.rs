use thiserror::Error;

use moma_builder::BuildError;

/// CLI-level error split by exit code: configuration problems exit with 2,
/// numeric failures with 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }

    pub fn from_build(e: BuildError) -> Self {
        match e {
            BuildError::Numeric(markov_core::Error::Singular(s)) => {
                CliError::Numeric(format!("singular matrix{s}"))
            }
            BuildError::Numeric(inner) => CliError::Numeric(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    pub fn from_policy(e: maintenance_model::PolicyError) -> Self {
        use maintenance_model::PolicyError::*;
        match e {
            Costs(s) => CliError::Config(s),
            Maintenance(s) => CliError::Numeric(s),
            Build(b) => CliError::from_build(b),
            Numeric(n) => CliError::Numeric(n.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
