//! Hierarchical inspect/repair/replace maintenance policy over modular
//! absorbing-chain models: maintenance and cost matrices, post-inspection
//! probability laws, downtime cost integral and the per-cycle expected cost
//! recursion.

mod cost;
mod cycle;
mod error;
mod policy;
mod quad;
mod selector;

pub use cost::{CostParams, DownCostForm};
pub use cycle::{
    post_inspection_module_law, Accounting, CaseProbabilities, CycleCost, CycleLaw, EvalOptions,
    ExpectationForm, MaintenancePolicy, DOWNTIME_QUAD_TOL,
};
pub use error::{PolicyError, Result};
pub use policy::{
    build_cost_matrix, build_maintenance_matrix, expected_row_costs, maintenance_optimal_block,
};
pub use quad::integrate;
pub use selector::{build_selector, SelectorMatrix};
