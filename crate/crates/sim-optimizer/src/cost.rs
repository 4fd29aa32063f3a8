use maintenance_model::{Accounting, DownCostForm, MaintenancePolicy};
use markov_core::Matrix;
use rand::Rng;

use crate::path::{sample_initial, sample_path_from, JumpTables, SamplePath};

/// Cost charged at the inspection closing one cycle, given the realized path:
/// the inspection cost in the optimal case, inspection plus realized module
/// repair costs in the critical case, and inspection plus downtime plus full
/// replacement in the down case.
pub fn cycle_cost_sample(
    path: &SamplePath,
    policy: &MaintenancePolicy,
    tau: f64,
    accounting: Accounting,
) -> f64 {
    let sys = policy.system();
    let costs = policy.costs();
    let c_i = costs.inspection;
    let state = path.final_state();
    if state < sys.u1_count() {
        return c_i;
    }
    if state < sys.up_count() {
        let strip = matches!(accounting, Accounting::Global);
        let mut cost = if strip { c_i } else { 0.0 };
        for (i, comp) in sys.components(state).iter().enumerate() {
            let ext = comp.unwrap_or_else(|| sys.modules()[i].ext_op_count());
            cost += policy.realized_module_cost(i, ext, strip);
        }
        return cost;
    }
    // System failed during the cycle; the last jump is the absorption time.
    let failed_at = path.last_jump_time().unwrap_or(0.0);
    let down = costs
        .down_cost_form
        .cost_at(failed_at, tau, costs.down_rate);
    c_i + down + costs.system_replacement
}

/// Sampler of the randomized maintenance target: per module, cumulative rows
/// of the maintenance matrix.
#[derive(Debug, Clone)]
pub struct MaintenanceSampler {
    /// Per module, per extended state: (cumulative probability, target).
    rows: Vec<Vec<Vec<(f64, usize)>>>,
    /// Mixed-radix offsets mapping per-module optimal components to the
    /// system state index inside the optimal class.
    optimal_radix: Vec<usize>,
}

impl MaintenanceSampler {
    pub fn new(policy: &MaintenancePolicy) -> Self {
        let sys = policy.system();
        let rows = (0..sys.modules().len())
            .map(|i| cumulative_rows(policy.maintenance_matrix(i)))
            .collect();
        let optimal_radix = sys
            .modules()
            .iter()
            .map(|m| m.ext_optimal_count())
            .collect();
        MaintenanceSampler {
            rows,
            optimal_radix,
        }
    }

    /// Applies maintenance to a realized critical state: every module jumps
    /// to a sampled optimal target; the result indexes into the optimal class.
    pub fn maintain(&self, policy: &MaintenancePolicy, state: usize, rng: &mut impl Rng) -> usize {
        let sys = policy.system();
        let mut idx = 0;
        for (i, comp) in sys.components(state).iter().enumerate() {
            let ext = comp.unwrap_or_else(|| sys.modules()[i].ext_op_count());
            let row = &self.rows[i][ext];
            let u: f64 = rng.gen();
            let pos = row.partition_point(|(cum, _)| *cum < u);
            let target = row[pos.min(row.len() - 1)].1;
            debug_assert!(target < self.optimal_radix[i]);
            idx = idx * self.optimal_radix[i] + target;
        }
        idx
    }
}

fn cumulative_rows(m: &Matrix) -> Vec<Vec<(f64, usize)>> {
    (0..m.rows())
        .map(|i| {
            let mut cum = 0.0;
            let mut row: Vec<(f64, usize)> = m
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(j, p)| {
                    cum += p;
                    (cum, j)
                })
                .collect();
            if let Some(last) = row.last_mut() {
                last.0 = 1.0;
            }
            row
        })
        .collect()
}

/// Simulates `cycles` consecutive cycles with the maintenance transitions
/// applied at every inspection, returning the accumulated cost.
pub fn multi_cycle_cost_sample(
    policy: &MaintenancePolicy,
    tables: &JumpTables,
    sampler: &MaintenanceSampler,
    tau: f64,
    cycles: usize,
    accounting: Accounting,
    rng: &mut impl Rng,
) -> f64 {
    let sys = policy.system();
    let costs = policy.costs();
    let c_i = costs.inspection;
    let strip = matches!(accounting, Accounting::Global);
    let mut state = sample_initial(sys.alpha_sys().entries(), rng);
    let mut total = 0.0;
    for _ in 0..cycles {
        let path = sample_path_from(tables, state, tau, rng);
        let end = path.final_state();
        if end < sys.u1_count() {
            total += c_i;
            state = end;
        } else if end < sys.up_count() {
            let mut cost = if strip { c_i } else { 0.0 };
            for (i, comp) in sys.components(end).iter().enumerate() {
                let ext = comp.unwrap_or_else(|| sys.modules()[i].ext_op_count());
                cost += policy.realized_module_cost(i, ext, strip);
            }
            total += cost;
            state = sampler.maintain(policy, end, rng);
        } else {
            let failed_at = path.last_jump_time().unwrap_or(0.0);
            let down = match &costs.down_cost_form {
                DownCostForm::Linear => (tau - failed_at).max(0.0) * costs.down_rate,
                form => form.cost_at(failed_at, tau, costs.down_rate),
            };
            total += c_i + down + costs.system_replacement;
            state = sample_initial(sys.beta_sys().entries(), rng);
        }
    }
    total
}
