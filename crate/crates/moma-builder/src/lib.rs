//! Bottom-up construction of modular-system state spaces and generators:
//! phase-type units compose into modules (with optional shock processes),
//! modules compose into the block-structured system generator with one
//! aggregated absorbing down state.

mod error;
mod module;
mod structure;
mod system;

pub use error::{BuildError, Result};
pub use module::{
    attach_shocks, build_module_wear_generator, classify_module_states, ModuleModel,
    ModulePartition, ModuleSpec, UnitSpec, UnitState,
};
pub use structure::StructureSpec;
pub use system::{build_system_generator, SystemModel};
