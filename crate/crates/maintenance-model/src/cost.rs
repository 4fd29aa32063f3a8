use serde::{Deserialize, Serialize};

use moma_builder::SystemModel;

use crate::error::{PolicyError, Result};

/// Shape of the downtime cost incurred when the system fails `t` time units
/// into a cycle of length `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DownCostForm {
    /// `(tau - t) * down_rate`: linear in the non-operational time.
    Linear,
    /// Piecewise-linear table of (t, cost) points, evaluated inside the
    /// downtime quadrature. Values outside the table clamp to the ends.
    Tabulated(Vec<(f64, f64)>),
}

impl DownCostForm {
    /// Cost given failure at time `t` into a cycle of length `tau`.
    pub fn cost_at(&self, t: f64, tau: f64, down_rate: f64) -> f64 {
        match self {
            DownCostForm::Linear => (tau - t).max(0.0) * down_rate,
            DownCostForm::Tabulated(points) => {
                if points.is_empty() {
                    return 0.0;
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let (t0, c0) = pair[0];
                    let (t1, c1) = pair[1];
                    if t <= t1 {
                        let w = (t - t0) / (t1 - t0);
                        return c0 + w * (c1 - c0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }
}

/// Cost parameters of the maintenance policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Inspection cost C_I.
    pub inspection: f64,
    /// restore[module][unit][target phase]: cost of restoring that failed
    /// unit to the given operational phase.
    pub restore: Vec<Vec<Vec<f64>>>,
    /// Module replacement cost per module.
    pub module_replacement: Vec<f64>,
    /// Full system replacement cost.
    pub system_replacement: f64,
    /// Downtime cost rate per (scaled) time unit.
    pub down_rate: f64,
    pub down_cost_form: DownCostForm,
}

impl CostParams {
    /// Builds the common parametrisation: every unit costs `c_f0` to restore
    /// to its first operational phase and `c_f1` to any later phase.
    pub fn uniform(
        system: &SystemModel,
        inspection: f64,
        c_f0: f64,
        c_f1: f64,
        module_replacement: f64,
        system_replacement: f64,
        down_rate: f64,
    ) -> Self {
        let restore = system
            .modules()
            .iter()
            .map(|m| {
                m.units()
                    .iter()
                    .map(|u| {
                        (0..u.lifetime.order())
                            .map(|p| if p == 0 { c_f0 } else { c_f1 })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        CostParams {
            inspection,
            restore,
            module_replacement: vec![module_replacement; system.modules().len()],
            system_replacement,
            down_rate,
            down_cost_form: DownCostForm::Linear,
        }
    }

    pub fn validate(&self, system: &SystemModel) -> Result<()> {
        let k = system.modules().len();
        if self.restore.len() != k || self.module_replacement.len() != k {
            return Err(PolicyError::Costs(format!(
                "cost tables cover {} modules, system has {k}",
                self.restore.len()
            )));
        }
        for (i, m) in system.modules().iter().enumerate() {
            if self.restore[i].len() != m.units().len() {
                return Err(PolicyError::Costs(format!(
                    "module {}: restore table covers {} units, module has {}",
                    m.name,
                    self.restore[i].len(),
                    m.units().len()
                )));
            }
            for (j, u) in m.units().iter().enumerate() {
                if self.restore[i][j].len() != u.lifetime.order() {
                    return Err(PolicyError::Costs(format!(
                        "module {}, unit {}: {} restore costs for {} phases",
                        m.name,
                        u.name,
                        self.restore[i][j].len(),
                        u.lifetime.order()
                    )));
                }
            }
        }
        let all = self
            .restore
            .iter()
            .flatten()
            .flatten()
            .chain(self.module_replacement.iter())
            .chain([&self.inspection, &self.system_replacement, &self.down_rate]);
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return Err(PolicyError::Costs(format!(
                    "negative or non-finite cost {v}"
                )));
            }
        }
        Ok(())
    }
}
