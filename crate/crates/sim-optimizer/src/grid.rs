use maintenance_model::{EvalOptions, MaintenancePolicy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{cycle_cost_sample, multi_cycle_cost_sample, MaintenanceSampler};
use crate::path::{sample_path, JumpTables};
use crate::rng::replication_rng;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Policy(#[from] maintenance_model::PolicyError),
}

/// How the inspection count A is derived from the useful life and the
/// inspection interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InspectionRule {
    CeilHorizon,
    RoundHorizon,
}

impl InspectionRule {
    pub fn inspections(&self, horizon: f64, tau: f64) -> usize {
        let ratio = horizon / tau;
        let a = match self {
            InspectionRule::CeilHorizon => ratio.ceil(),
            InspectionRule::RoundHorizon => ratio.round(),
        };
        (a as usize).max(1)
    }
}

/// Monte-Carlo grid search configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Replications per grid point.
    pub replications: usize,
    /// Strictly increasing positive inspection intervals.
    pub grid: Vec<f64>,
    pub seed: u64,
    /// Useful life of the system; the default grid uses the mean lifetime.
    pub horizon: f64,
    pub a_rule: InspectionRule,
    /// Simulate every cycle with maintenance applied instead of
    /// extrapolating the first cycle.
    pub multi_cycle: bool,
}

impl SimConfig {
    /// The equispaced grid `tau_m = m * tau_max / points`.
    pub fn equispaced(points: usize, tau_max: f64) -> Vec<f64> {
        (1..=points)
            .map(|m| m as f64 * tau_max / points as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.replications == 0 {
            return Err(SimError::Config("need at least one replication".into()));
        }
        if self.grid.len() < 2 {
            return Err(SimError::Config("grid needs at least two points".into()));
        }
        if self.grid[0] <= 0.0 {
            return Err(SimError::Config("grid must be positive".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::Config("grid must be strictly increasing".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(SimError::Config("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub tau: f64,
    pub inspections: usize,
    /// Average sampled cost (per cycle in first-cycle mode, per horizon in
    /// multi-cycle mode).
    pub avg_cost: f64,
    pub avg_cost_se: f64,
    /// Objective minimized over the grid: avg_cost * A in first-cycle mode,
    /// avg_cost itself in multi-cycle mode.
    pub objective: f64,
    pub objective_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub points: Vec<GridPoint>,
    pub best_index: usize,
}

impl OptimizationResult {
    pub fn best(&self) -> &GridPoint {
        &self.points[self.best_index]
    }

    fn from_points(points: Vec<GridPoint>) -> Self {
        // Ties break toward the larger interval (fewer interventions).
        let mut best = 0;
        for (i, p) in points.iter().enumerate() {
            if p.objective <= points[best].objective {
                best = i;
            }
        }
        OptimizationResult {
            points,
            best_index: best,
        }
    }
}

/// Monte-Carlo grid search for the inspection interval: per grid point, R
/// independent replications of the first cycle (or of all A cycles in
/// multi-cycle mode), averaged and extrapolated to the useful life.
///
/// The result is a deterministic function of (seed, config) regardless of
/// how many worker threads run the grid.
pub fn grid_optimize(
    policy: &MaintenancePolicy,
    config: &SimConfig,
    accounting: maintenance_model::Accounting,
) -> Result<OptimizationResult, SimError> {
    config.validate()?;
    let tables = JumpTables::new(policy.system());
    let sampler = if config.multi_cycle {
        Some(MaintenanceSampler::new(policy))
    } else {
        None
    };
    let alpha = policy.system().alpha_sys().entries().to_vec();
    let r = config.replications;

    let points: Vec<GridPoint> = config
        .grid
        .par_iter()
        .enumerate()
        .map(|(m, &tau)| {
            let inspections = config.a_rule.inspections(config.horizon, tau);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for rep in 0..r {
                let mut rng = replication_rng(config.seed, m as u64, rep as u64);
                let cost = match &sampler {
                    Some(sampler) => multi_cycle_cost_sample(
                        policy,
                        &tables,
                        sampler,
                        tau,
                        inspections,
                        accounting,
                        &mut rng,
                    ),
                    None => {
                        let path = sample_path(&tables, &alpha, tau, &mut rng);
                        cycle_cost_sample(&path, policy, tau, accounting)
                    }
                };
                sum += cost;
                sum_sq += cost * cost;
            }
            let mean = sum / r as f64;
            let var = if r > 1 {
                ((sum_sq - sum * sum / r as f64) / (r as f64 - 1.0)).max(0.0)
            } else {
                0.0
            };
            let se = (var / r as f64).sqrt();
            let (objective, objective_se) = if config.multi_cycle {
                (mean, se)
            } else {
                (mean * inspections as f64, se * inspections as f64)
            };
            GridPoint {
                tau,
                inspections,
                avg_cost: mean,
                avg_cost_se: se,
                objective,
                objective_se,
            }
        })
        .collect();

    Ok(OptimizationResult::from_points(points))
}

/// Deterministic counterpart: sweeps the expected-cost recursion over the
/// same grid. Standard errors are zero.
pub fn analytic_sweep(
    policy: &MaintenancePolicy,
    grid: &[f64],
    horizon: f64,
    a_rule: InspectionRule,
    opts: EvalOptions,
) -> Result<OptimizationResult, SimError> {
    if grid.is_empty() {
        return Err(SimError::Config("empty grid".into()));
    }
    let points: Vec<GridPoint> = grid
        .par_iter()
        .map(|&tau| {
            let inspections = a_rule.inspections(horizon, tau);
            let (total, cycles) = policy
                .total_expected_cost(tau, inspections, opts)
                .expect("expected-cost recursion");
            GridPoint {
                tau,
                inspections,
                // First-cycle expected cost: directly comparable with the
                // Monte-Carlo per-cycle average, which simulates cycle one.
                avg_cost: cycles[0].total,
                avg_cost_se: 0.0,
                objective: total,
                objective_se: 0.0,
            }
        })
        .collect();
    Ok(OptimizationResult::from_points(points))
}
