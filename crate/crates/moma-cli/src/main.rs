use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use moma_cli::commands::{self, CurveMethod, RunOptions};
use moma_cli::config::ConfigFile;

/// Modular-system reliability and maintenance-policy toolkit: builds
/// absorbing-chain models bottom-up from unit lifetimes, evaluates the
/// hierarchical inspection policy, and optimizes the inspection interval.
#[derive(Parser)]
#[command(name = "moma", version, about)]
struct Cli {
    /// Model configuration file (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory for CSV/JSON results.
    #[arg(long, global = true, default_value = "moma-out")]
    out: PathBuf,
    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulate every cycle with maintenance applied instead of
    /// extrapolating the first cycle.
    #[arg(long, global = true)]
    multi_cycle: bool,
    /// Inspection-cost accounting in the critical branch.
    #[arg(long, global = true, value_enum)]
    accounting: Option<AccountingArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccountingArg {
    #[value(name = "per_module")]
    PerModule,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Analytic,
    Montecarlo,
}

#[derive(Subcommand)]
enum Command {
    /// Build the model and emit generators, partitions and state counts.
    Build,
    /// Reliability curve of the unmaintained system.
    Reliability {
        /// Number of grid intervals.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Largest time on the curve, in hours.
        #[arg(long)]
        tmax: f64,
    },
    /// Cost-versus-interval curve for each scenario.
    CostCurve {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Restrict to one scenario.
        #[arg(long, conflicts_with = "all")]
        scenario: Option<String>,
        /// Run every configured scenario (the default).
        #[arg(long)]
        all: bool,
    },
    /// Pick the cost-optimal inspection interval per scenario.
    Optimize {
        /// Restrict to one scenario.
        #[arg(long, conflicts_with = "all")]
        scenario: Option<String>,
        /// Run every configured scenario (the default).
        #[arg(long)]
        all: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        seed: cli.seed,
        out_dir: cli.out.clone(),
        multi_cycle: cli.multi_cycle.then_some(true),
        accounting: cli.accounting.map(|a| match a {
            AccountingArg::PerModule => maintenance_model::Accounting::PerModule,
            AccountingArg::Global => maintenance_model::Accounting::Global,
        }),
    };

    let config = match ConfigFile::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let outcome = match &cli.command {
        Command::Build => commands::cmd_build(&config, &cli.config, &opts).map(|p| {
            println!(
                "operative states: {} ({} optimal, {} critical); down states aggregated: {}",
                p.operative_states,
                p.optimal_states,
                p.critical_states,
                p.pre_aggregation_down_states
            );
            println!("mean lifetime: {:.1} hours", p.mean_lifetime_hours);
            for m in &p.modules {
                println!(
                    "  module {}: {} operational states ({} optimal)",
                    m.name, m.operational_states, m.optimal_states
                );
            }
        }),
        Command::Reliability { grid, tmax } => {
            commands::cmd_reliability(&config, &cli.config, *grid, *tmax, &opts).map(|p| {
                println!("mean lifetime: {:.1} hours", p.mean_lifetime_hours);
                println!("wrote {} reliability samples", p.samples.len());
            })
        }
        Command::CostCurve { method, scenario, all: _ } => {
            let method = match method {
                MethodArg::Analytic => CurveMethod::Analytic,
                MethodArg::Montecarlo => CurveMethod::Montecarlo,
            };
            commands::cmd_cost_curve(&config, &cli.config, method, scenario.as_deref(), &opts).map(
                |p| {
                    for c in &p.curves {
                        println!(
                            "{}: best tau {:.0} h, {} inspections, objective {:.4} (se {:.4})",
                            c.scenario,
                            c.best_tau_hours,
                            c.best_inspections,
                            c.best_objective,
                            c.best_std_error
                        );
                    }
                },
            )
        }
        Command::Optimize { scenario, all: _ } => {
            commands::cmd_optimize(&config, &cli.config, scenario.as_deref(), &opts).map(|p| {
                println!("seed {}", p.seed);
                for r in &p.rows {
                    println!(
                        "{}: tau* {:.0} h, A {}, total cost {:.4} (se {:.4})",
                        r.scenario, r.tau_hours, r.inspections, r.total_cost, r.std_error
                    );
                }
            })
        }
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
