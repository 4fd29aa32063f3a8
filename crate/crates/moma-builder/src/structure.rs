use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};

/// Coherent monotone structure over the up/down states of n components.
///
/// Used both for the units inside a module and for the modules inside the
/// system. `Explicit` carries a truth table indexed by bitmask, bit j set
/// meaning component j is up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StructureSpec {
    Series,
    Parallel,
    KOutOfN(usize),
    Explicit(Vec<bool>),
}

impl StructureSpec {
    /// System/module state given component up flags.
    pub fn is_up(&self, up: &[bool]) -> bool {
        match self {
            StructureSpec::Series => up.iter().all(|u| *u),
            StructureSpec::Parallel => up.iter().any(|u| *u),
            StructureSpec::KOutOfN(k) => up.iter().filter(|u| **u).count() >= *k,
            StructureSpec::Explicit(table) => {
                let mut mask = 0usize;
                for (j, u) in up.iter().enumerate() {
                    if *u {
                        mask |= 1 << j;
                    }
                }
                table[mask]
            }
        }
    }

    /// Checks coherence (all-up is up, all-down is down) and monotonicity
    /// (repairing a component never takes the structure down).
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(BuildError::Structure(
                "structure over zero components".into(),
            ));
        }
        match self {
            StructureSpec::Series | StructureSpec::Parallel => Ok(()),
            StructureSpec::KOutOfN(k) => {
                if *k == 0 || *k > n {
                    Err(BuildError::Structure(format!(
                        "k-out-of-n requires 1 <= k <= {n}, got k={k}"
                    )))
                } else {
                    Ok(())
                }
            }
            StructureSpec::Explicit(table) => {
                if table.len() != 1 << n {
                    return Err(BuildError::Structure(format!(
                        "explicit structure table has {} entries, expected {}",
                        table.len(),
                        1 << n
                    )));
                }
                if !table[(1 << n) - 1] {
                    return Err(BuildError::Structure(
                        "incoherent structure: down with all components up".into(),
                    ));
                }
                if table[0] {
                    return Err(BuildError::Structure(
                        "incoherent structure: up with all components failed".into(),
                    ));
                }
                for mask in 0..(1usize << n) {
                    for j in 0..n {
                        if mask & (1 << j) == 0 {
                            let repaired = mask | (1 << j);
                            if table[mask] && !table[repaired] {
                                return Err(BuildError::Structure(format!(
                                    "non-monotone structure: repairing component {j} takes state {mask:#b} down"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }
}
