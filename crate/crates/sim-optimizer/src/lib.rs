//! Monte-Carlo simulation of absorbing-chain sample paths and the grid search
//! selecting the inspection interval that minimizes total maintenance cost
//! over the system's useful life, plus a deterministic analytic sweep.

mod cost;
mod grid;
mod path;
mod rng;

pub use cost::{cycle_cost_sample, multi_cycle_cost_sample, MaintenanceSampler};
pub use grid::{
    analytic_sweep, grid_optimize, GridPoint, InspectionRule, OptimizationResult, SimConfig,
    SimError,
};
pub use path::{sample_initial, sample_path, sample_path_from, JumpTables, SamplePath};
pub use rng::replication_rng;
