//! Configuration ingestion, command implementations and result serialization
//! for the modular-system maintenance CLI.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{
    cmd_build, cmd_cost_curve, cmd_optimize, cmd_reliability, CurveMethod, RunOptions,
};
pub use config::ConfigFile;
pub use error::{CliError, Result};
pub use output::{ModelDump, ResultBundle};
