use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use maintenance_model::{EvalOptions, MaintenancePolicy};
use sim_optimizer::{analytic_sweep, grid_optimize, OptimizationResult, SimConfig};

use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_matrix_fixture, ModelDump, ResultBundle};

/// Flag overrides shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub multi_cycle: Option<bool>,
    pub accounting: Option<maintenance_model::Accounting>,
}

impl RunOptions {
    fn seed_for(&self, config: &ConfigFile) -> u64 {
        self.seed.unwrap_or(config.simulation.seed)
    }

    fn accounting_for(&self, config: &ConfigFile) -> maintenance_model::Accounting {
        self.accounting.unwrap_or_else(|| config.accounting())
    }

    fn multi_cycle_for(&self, config: &ConfigFile) -> bool {
        self.multi_cycle.unwrap_or(config.simulation.multi_cycle)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildPayload {
    pub modules: Vec<ModuleSummary>,
    pub operative_states: usize,
    pub optimal_states: usize,
    pub critical_states: usize,
    pub pre_aggregation_down_states: usize,
    pub optimal_state_labels: Vec<String>,
    pub mean_lifetime_hours: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleSummary {
    pub name: String,
    pub operational_states: usize,
    pub optimal_states: usize,
    pub map_order: usize,
    pub down_tuples_aggregated: usize,
}

/// Builds the model, writes the exact dump, per-module generator and
/// maintenance fixtures, and a summary with the state bookkeeping.
pub fn cmd_build(
    config: &ConfigFile,
    config_path: &Path,
    opts: &RunOptions,
) -> Result<BuildPayload> {
    let t0 = Instant::now();
    let system = config.build_system()?;
    let dump = ModelDump::from_system(&system);
    dump.write(&opts.out_dir)?;

    for (i, m) in system.modules().iter().enumerate() {
        let tag = format!("module_{i}_{}", sanitize(&m.name));
        write_matrix_fixture(&opts.out_dir, &format!("{tag}_q_wear.txt"), m.q_wear())?;
        if m.map_order() > 1 {
            write_matrix_fixture(&opts.out_dir, &format!("{tag}_q_ext.txt"), m.q_ext())?;
        }
        let maintenance =
            maintenance_model::build_maintenance_matrix(m).map_err(CliError::from_policy)?;
        write_matrix_fixture(
            &opts.out_dir,
            &format!("{tag}_maintenance.txt"),
            &maintenance,
        )?;
    }
    write_matrix_fixture(&opts.out_dir, "q_sys.txt", system.q_sys())?;

    let mean_scaled = system
        .lifetime_ph()
        .map_err(CliError::from_build)?
        .mean()
        .map_err(|e| CliError::Numeric(e.to_string()))?;

    let payload = BuildPayload {
        modules: system
            .modules()
            .iter()
            .map(|m| ModuleSummary {
                name: m.name.clone(),
                operational_states: m.ext_op_count(),
                optimal_states: m.ext_optimal_count(),
                map_order: m.map_order(),
                down_tuples_aggregated: m.down_tuple_count(),
            })
            .collect(),
        operative_states: system.up_count(),
        optimal_states: system.u1_count(),
        critical_states: system.u2_count(),
        pre_aggregation_down_states: system.pre_aggregation_down_states(),
        optimal_state_labels: system.state_labels()[..system.u1_count()].to_vec(),
        mean_lifetime_hours: config.scaled_to_hours(mean_scaled),
    };
    let mut bundle = ResultBundle::new("build", config_path, None, payload.clone());
    bundle.elapsed_ms = t0.elapsed().as_millis();
    bundle.write(&opts.out_dir, "build_summary.json")?;
    Ok(payload)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityPayload {
    pub mean_lifetime_hours: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Reliability curve of the unmaintained system on an equispaced grid.
pub fn cmd_reliability(
    config: &ConfigFile,
    config_path: &Path,
    grid: usize,
    tmax_hours: f64,
    opts: &RunOptions,
) -> Result<ReliabilityPayload> {
    if grid < 2 {
        return Err(CliError::Config(
            "reliability grid needs at least 2 points".into(),
        ));
    }
    if !(tmax_hours > 0.0) {
        return Err(CliError::Config("tmax must be positive".into()));
    }
    let t0 = Instant::now();
    let system = config.build_system()?;
    let ph = system.lifetime_ph().map_err(CliError::from_build)?;
    let mean_hours =
        config.scaled_to_hours(ph.mean().map_err(|e| CliError::Numeric(e.to_string()))?);
    let mut samples = Vec::with_capacity(grid + 1);
    let mut rows = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        let hours = tmax_hours * k as f64 / grid as f64;
        let scaled = config.hours_to_scaled(hours);
        let r = ph
            .reliability(scaled)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        samples.push((hours, r));
        rows.push(vec![
            format!("{hours:.6}"),
            format!("{scaled:.12e}"),
            format!("{r:.12e}"),
        ]);
    }
    write_csv(
        &opts.out_dir,
        "reliability.csv",
        "t_hours,t_scaled,reliability",
        &rows,
    )?;
    let payload = ReliabilityPayload {
        mean_lifetime_hours: mean_hours,
        samples,
    };
    let mut bundle = ResultBundle::new("reliability", config_path, None, payload.clone());
    bundle.elapsed_ms = t0.elapsed().as_millis();
    bundle.write(&opts.out_dir, "reliability_summary.json")?;
    Ok(payload)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Analytic,
    Montecarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioCurve {
    pub scenario: String,
    pub down_rate_per_hour: f64,
    pub method: CurveMethod,
    /// (tau_hours, inspections, objective, std_error) per grid point.
    pub points: Vec<(f64, usize, f64, f64)>,
    pub best_tau_hours: f64,
    pub best_inspections: usize,
    pub best_objective: f64,
    pub best_std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostCurvePayload {
    pub method: CurveMethod,
    pub seed: u64,
    pub curves: Vec<ScenarioCurve>,
}

fn scenario_list(config: &ConfigFile, requested: Option<&str>) -> Result<Vec<String>> {
    match requested {
        None => Ok(config.scenario_names()),
        Some(name) => {
            if config.costs.down_rate_per_hour.contains_key(name) {
                Ok(vec![name.to_string()])
            } else {
                Err(CliError::Config(format!(
                    "unknown scenario {name:?}; configured: {:?}",
                    config.scenario_names()
                )))
            }
        }
    }
}

fn grid_for(config: &ConfigFile, system: &moma_builder::SystemModel) -> Result<Vec<f64>> {
    let tau_max = match config.simulation.tau_max_hours {
        Some(h) => config.hours_to_scaled(h),
        None => system
            .lifetime_ph()
            .map_err(CliError::from_build)?
            .mean()
            .map_err(|e| CliError::Numeric(e.to_string()))?,
    };
    Ok(SimConfig::equispaced(config.simulation.grid_size, tau_max))
}

fn run_scenario(
    config: &ConfigFile,
    system: &moma_builder::SystemModel,
    scenario: &str,
    method: CurveMethod,
    opts: &RunOptions,
) -> Result<(OptimizationResult, f64)> {
    let costs = config.costs_for(system, scenario)?;
    let policy = MaintenancePolicy::new(system.clone(), costs).map_err(CliError::from_policy)?;
    let grid = grid_for(config, system)?;
    let horizon = config.horizon_scaled(system)?;
    let result = match method {
        CurveMethod::Montecarlo => {
            let sim = SimConfig {
                replications: config.simulation.replications,
                grid,
                seed: opts.seed_for(config),
                horizon,
                a_rule: config.a_rule(),
                multi_cycle: opts.multi_cycle_for(config),
            };
            grid_optimize(&policy, &sim, opts.accounting_for(config))
                .map_err(|e| CliError::Numeric(e.to_string()))?
        }
        CurveMethod::Analytic => {
            let eval = EvalOptions {
                accounting: opts.accounting_for(config),
                form: config.expectation_form(),
            };
            analytic_sweep(&policy, &grid, horizon, config.a_rule(), eval)
                .map_err(|e| CliError::Numeric(e.to_string()))?
        }
    };
    let rate = config.costs.down_rate_per_hour[scenario];
    Ok((result, rate))
}

fn curve_from(
    config: &ConfigFile,
    scenario: &str,
    method: CurveMethod,
    rate: f64,
    result: &OptimizationResult,
) -> ScenarioCurve {
    let points = result
        .points
        .iter()
        .map(|p| {
            (
                config.scaled_to_hours(p.tau),
                p.inspections,
                p.objective,
                p.objective_se,
            )
        })
        .collect();
    let best = result.best();
    ScenarioCurve {
        scenario: scenario.to_string(),
        down_rate_per_hour: rate,
        method,
        points,
        best_tau_hours: config.scaled_to_hours(best.tau),
        best_inspections: best.inspections,
        best_objective: best.objective,
        best_std_error: best.objective_se,
    }
}

/// Objective over the whole inspection-interval grid, per scenario, by the
/// analytic recursion or Monte-Carlo simulation.
pub fn cmd_cost_curve(
    config: &ConfigFile,
    config_path: &Path,
    method: CurveMethod,
    scenario: Option<&str>,
    opts: &RunOptions,
) -> Result<CostCurvePayload> {
    let t0 = Instant::now();
    let system = config.build_system()?;
    let mut curves = Vec::new();
    for name in scenario_list(config, scenario)? {
        let (result, rate) = run_scenario(config, &system, &name, method, opts)?;
        let curve = curve_from(config, &name, method, rate, &result);
        let rows: Vec<Vec<String>> = result
            .points
            .iter()
            .map(|p| {
                vec![
                    format!("{:.6}", config.scaled_to_hours(p.tau)),
                    format!("{:.12e}", p.tau),
                    p.inspections.to_string(),
                    format!("{:.12e}", p.objective),
                    format!("{:.12e}", p.objective_se),
                    format!("{:.12e}", p.avg_cost),
                ]
            })
            .collect();
        let method_tag = match method {
            CurveMethod::Analytic => "analytic",
            CurveMethod::Montecarlo => "montecarlo",
        };
        write_csv(
            &opts.out_dir,
            &format!("cost_curve_{}_{}.csv", sanitize(&name), method_tag),
            "tau_hours,tau_scaled,inspections,objective,std_error,avg_cycle_cost",
            &rows,
        )?;
        curves.push(curve);
    }
    write_gnuplot_script(&opts.out_dir, config, &curves)?;
    let payload = CostCurvePayload {
        method,
        seed: opts.seed_for(config),
        curves,
    };
    let mut bundle = ResultBundle::new(
        "cost-curve",
        config_path,
        Some(opts.seed_for(config)),
        payload.clone(),
    );
    bundle.elapsed_ms = t0.elapsed().as_millis();
    bundle.write(&opts.out_dir, "cost_curve_summary.json")?;
    Ok(payload)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizePayload {
    pub seed: u64,
    pub rows: Vec<ScenarioOptimum>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioOptimum {
    pub scenario: String,
    pub down_rate_per_hour: f64,
    pub tau_hours: f64,
    pub inspections: usize,
    pub total_cost: f64,
    pub std_error: f64,
}

/// Monte-Carlo grid search per scenario, reported in hours.
pub fn cmd_optimize(
    config: &ConfigFile,
    config_path: &Path,
    scenario: Option<&str>,
    opts: &RunOptions,
) -> Result<OptimizePayload> {
    let t0 = Instant::now();
    let system = config.build_system()?;
    let mut rows = Vec::new();
    for name in scenario_list(config, scenario)? {
        let (result, rate) = run_scenario(config, &system, &name, CurveMethod::Montecarlo, opts)?;
        let best = result.best();
        rows.push(ScenarioOptimum {
            scenario: name,
            down_rate_per_hour: rate,
            tau_hours: config.scaled_to_hours(best.tau),
            inspections: best.inspections,
            total_cost: best.objective,
            std_error: best.objective_se,
        });
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                format!("{:.6e}", r.down_rate_per_hour),
                format!("{:.6}", r.tau_hours),
                r.inspections.to_string(),
                format!("{:.12e}", r.total_cost),
                format!("{:.12e}", r.std_error),
            ]
        })
        .collect();
    write_csv(
        &opts.out_dir,
        "optimize.csv",
        "scenario,down_rate_per_hour,tau_hours,inspections,total_cost,std_error",
        &csv_rows,
    )?;
    let payload = OptimizePayload {
        seed: opts.seed_for(config),
        rows,
    };
    let mut bundle = ResultBundle::new(
        "optimize",
        config_path,
        Some(opts.seed_for(config)),
        payload.clone(),
    );
    bundle.elapsed_ms = t0.elapsed().as_millis();
    bundle.write(&opts.out_dir, "optimize_summary.json")?;
    Ok(payload)
}

fn write_gnuplot_script(
    out_dir: &Path,
    _config: &ConfigFile,
    curves: &[ScenarioCurve],
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut file = fs::File::create(out_dir.join("cost_curves.gp"))?;
    writeln!(file, "set datafile separator ','")?;
    writeln!(file, "set xlabel 'inspection interval (hours)'")?;
    writeln!(file, "set ylabel 'expected total cost'")?;
    writeln!(file, "set key top right")?;
    let plots: Vec<String> = curves
        .iter()
        .map(|c| {
            let method_tag = match c.method {
                CurveMethod::Analytic => "analytic",
                CurveMethod::Montecarlo => "montecarlo",
            };
            format!(
                "'cost_curve_{}_{}.csv' using 1:4 with linespoints title '{}'",
                sanitize(&c.scenario),
                method_tag,
                c.scenario
            )
        })
        .collect();
    if !plots.is_empty() {
        writeln!(file, "plot {}", plots.join(", \\\n     "))?;
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}
