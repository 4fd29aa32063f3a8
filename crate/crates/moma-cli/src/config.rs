use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use maintenance_model::{Accounting, CostParams, DownCostForm, ExpectationForm};
use markov_core::{MapProcess, Matrix, PhDistribution, ProbVector};
use moma_builder::{
    build_module_wear_generator, build_system_generator, ModuleSpec, StructureSpec, SystemModel,
    UnitSpec,
};
use sim_optimizer::InspectionRule;

use crate::error::{CliError, Result};

/// Top-level configuration file (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Hours per scaled time unit; rates in this file are per scaled unit.
    #[serde(default = "default_time_scale")]
    pub time_scale_hours: f64,
    pub system: SystemSection,
    pub modules: Vec<ModuleSection>,
    pub costs: CostsSection,
    #[serde(default)]
    pub simulation: SimSection,
}

fn default_time_scale() -> f64 {
    1e5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub structure: StructureConfig,
    /// Useful life of the system; defaults to the mean lifetime.
    #[serde(default)]
    pub horizon_hours: Option<f64>,
    /// Replacement law over the system states; defaults to the initial law.
    #[serde(default)]
    pub replacement_law: Option<Vec<f64>>,
    /// Reserved for a shock process hitting the system as a whole; only the
    /// per-module shock processes are supported.
    #[serde(default)]
    pub system_shock: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureConfig {
    Series,
    Parallel,
    KOutOfN(usize),
    Explicit(Vec<bool>),
}

impl StructureConfig {
    pub fn to_spec(&self) -> StructureSpec {
        match self {
            StructureConfig::Series => StructureSpec::Series,
            StructureConfig::Parallel => StructureSpec::Parallel,
            StructureConfig::KOutOfN(k) => StructureSpec::KOutOfN(*k),
            StructureConfig::Explicit(t) => StructureSpec::Explicit(t.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSection {
    pub name: String,
    pub structure: StructureConfig,
    pub units: Vec<UnitSection>,
    #[serde(default)]
    pub shock: Option<ShockSection>,
    /// Law over the module's optimal states used when the module is replaced.
    #[serde(default)]
    pub replacement_law: Option<Vec<f64>>,
    /// Replacement cost override for this module.
    #[serde(default)]
    pub replacement_cost: Option<f64>,
    /// Optional explicit optimal-state class, as combined state labels.
    #[serde(default)]
    pub optimal_states: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSection {
    pub name: String,
    /// `"exp(rate)"`, `"erlang(k, rate)"` or an explicit (alpha, T) pair.
    pub lifetime: LifetimeConfig,
    /// Post-repair law over the unit's operational phases; defaults to the
    /// lifetime's initial vector.
    #[serde(default)]
    pub repair_law: Option<Vec<f64>>,
    /// Restoration cost per target phase; defaults to the global rule.
    #[serde(default)]
    pub restore_costs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LifetimeConfig {
    Named(String),
    Explicit { alpha: Vec<f64>, t: Vec<Vec<f64>> },
}

impl LifetimeConfig {
    pub fn to_ph(&self, context: &str) -> Result<PhDistribution> {
        match self {
            LifetimeConfig::Named(text) => parse_named_lifetime(text, context),
            LifetimeConfig::Explicit { alpha, t } => {
                let alpha = ProbVector::sub_stochastic(alpha.clone()).map_err(|e| {
                    CliError::Config(format!("{context}: invalid initial vector: {e}"))
                })?;
                let t = Matrix::from_rows(t)
                    .map_err(|e| CliError::Config(format!("{context}: invalid matrix: {e}")))?;
                PhDistribution::new(alpha, t)
                    .map_err(|e| CliError::Numeric(format!("{context}: {e}")))
            }
        }
    }
}

fn parse_named_lifetime(text: &str, context: &str) -> Result<PhDistribution> {
    let body = text.trim();
    let (kind, args) = body
        .split_once('(')
        .and_then(|(k, rest)| rest.strip_suffix(')').map(|a| (k.trim(), a)))
        .ok_or_else(|| {
            CliError::Config(format!(
                "{context}: cannot parse lifetime {body:?}; expected exp(rate) or erlang(k, rate)"
            ))
        })?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    match (kind, parts.as_slice()) {
        ("exp", [rate]) => {
            let rate: f64 = rate
                .parse()
                .map_err(|_| CliError::Config(format!("{context}: bad rate {rate:?}")))?;
            PhDistribution::exponential(rate)
                .map_err(|e| CliError::Numeric(format!("{context}: {e}")))
        }
        ("erlang", [k, rate]) => {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::Config(format!("{context}: bad phase count {k:?}")))?;
            let rate: f64 = rate
                .parse()
                .map_err(|_| CliError::Config(format!("{context}: bad rate {rate:?}")))?;
            PhDistribution::erlang(k, rate)
                .map_err(|e| CliError::Numeric(format!("{context}: {e}")))
        }
        _ => Err(CliError::Config(format!(
            "{context}: unknown lifetime {body:?}; expected exp(rate) or erlang(k, rate)"
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSection {
    pub d0: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// Probability that an arriving shock kills the module.
    pub p1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    pub inspection: f64,
    /// Cost of restoring a failed unit to its first operational phase.
    pub restore_to_first_phase: f64,
    /// Cost of restoring a failed unit to any later operational phase.
    pub restore_to_later_phase: f64,
    pub module_replacement: f64,
    pub system_replacement: f64,
    /// Downtime cost rate per hour, one entry per scenario.
    pub down_rate_per_hour: BTreeMap<String, f64>,
    #[serde(default)]
    pub down_cost_form: DownCostFormConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownCostFormConfig {
    #[default]
    Linear,
    /// (hours-into-cycle, cost) points, interpolated linearly.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub replications: usize,
    pub grid_size: usize,
    /// Largest inspection interval of the grid; defaults to the mean lifetime.
    pub tau_max_hours: Option<f64>,
    pub seed: u64,
    pub a_rule: ARuleConfig,
    pub accounting: AccountingConfig,
    pub u2_weighting: WeightingConfig,
    pub multi_cycle: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            replications: 10_000,
            grid_size: 50,
            tau_max_hours: None,
            seed: 1,
            a_rule: ARuleConfig::Ceil,
            accounting: AccountingConfig::PerModule,
            u2_weighting: WeightingConfig::Verbatim,
            multi_cycle: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ARuleConfig {
    Ceil,
    Round,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AccountingConfig {
    PerModule,
    Global,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum WeightingConfig {
    Verbatim,
    Joint,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: ConfigFile = serde_path_to_error(de, path)?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.time_scale_hours > 0.0) {
            return Err(CliError::Config("time_scale_hours must be positive".into()));
        }
        if self.modules.is_empty() {
            return Err(CliError::Config("at least one module is required".into()));
        }
        if self.system.system_shock.is_some() {
            return Err(CliError::Config(
                "system_shock is reserved: shocks hitting the system as a whole are not \
                 supported; attach a shock process to each affected module instead"
                    .into(),
            ));
        }
        let mut names = BTreeSet::new();
        for m in &self.modules {
            if !names.insert(&m.name) {
                return Err(CliError::Config(format!(
                    "duplicate module name {:?}",
                    m.name
                )));
            }
            if m.units.is_empty() {
                return Err(CliError::Config(format!(
                    "module {:?} has no units",
                    m.name
                )));
            }
        }
        if self.costs.down_rate_per_hour.is_empty() {
            return Err(CliError::Config(
                "costs.down_rate_per_hour needs at least one scenario".into(),
            ));
        }
        if self.simulation.replications == 0 || self.simulation.grid_size < 2 {
            return Err(CliError::Config(
                "simulation needs replications >= 1 and grid_size >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Builds the module specifications (rates are already in scaled units).
    pub fn module_specs(&self) -> Result<Vec<ModuleSpec>> {
        self.modules
            .iter()
            .map(|m| {
                let units: Vec<UnitSpec> = m
                    .units
                    .iter()
                    .map(|u| {
                        let context = format!("module {:?}, unit {:?}", m.name, u.name);
                        Ok(UnitSpec::new(u.name.clone(), u.lifetime.to_ph(&context)?))
                    })
                    .collect::<Result<_>>()?;
                let mut spec = ModuleSpec::new(m.name.clone(), units, m.structure.to_spec());
                for (j, u) in m.units.iter().enumerate() {
                    if let Some(law) = &u.repair_law {
                        let law = ProbVector::new(law.clone()).map_err(|e| {
                            CliError::Config(format!(
                                "module {:?}, unit {:?}: repair law: {e}",
                                m.name, u.name
                            ))
                        })?;
                        spec.repair_laws[j] = Some(law);
                    }
                }
                if let Some(law) = &m.replacement_law {
                    let law = ProbVector::new(law.clone()).map_err(|e| {
                        CliError::Config(format!("module {:?}: replacement law: {e}", m.name))
                    })?;
                    spec = spec.with_replacement_law(law);
                }
                if let Some(states) = &m.optimal_states {
                    spec = spec.with_optimal_override(states.iter().cloned().collect());
                }
                if let Some(shock) = &m.shock {
                    let map = MapProcess::new(
                        Matrix::from_rows(&shock.d0).map_err(|e| {
                            CliError::Config(format!("module {:?}: D0: {e}", m.name))
                        })?,
                        Matrix::from_rows(&shock.d1).map_err(|e| {
                            CliError::Config(format!("module {:?}: D1: {e}", m.name))
                        })?,
                        ProbVector::new(shock.initial.clone()).map_err(|e| {
                            CliError::Config(format!("module {:?}: shock initial law: {e}", m.name))
                        })?,
                    )
                    .map_err(|e| CliError::Config(format!("module {:?}: shock: {e}", m.name)))?;
                    spec = spec.with_shock(map, shock.p1);
                }
                Ok(spec)
            })
            .collect()
    }

    /// Builds the full system model.
    pub fn build_system(&self) -> Result<SystemModel> {
        let specs = self.module_specs()?;
        let modules = specs
            .iter()
            .map(|s| build_module_wear_generator(s).map_err(CliError::from_build))
            .collect::<Result<Vec<_>>>()?;
        let mut system = build_system_generator(modules, self.system.structure.to_spec())
            .map_err(CliError::from_build)?;
        if let Some(beta) = &self.system.replacement_law {
            let beta = ProbVector::new(beta.clone())
                .map_err(|e| CliError::Config(format!("system replacement law: {e}")))?;
            system
                .set_replacement_law(beta)
                .map_err(CliError::from_build)?;
        }
        Ok(system)
    }

    /// Scenario names in deterministic order.
    pub fn scenario_names(&self) -> Vec<String> {
        self.costs.down_rate_per_hour.keys().cloned().collect()
    }

    /// Cost parameters for one scenario (rates converted to scaled units).
    pub fn costs_for(&self, system: &SystemModel, scenario: &str) -> Result<CostParams> {
        let per_hour = self
            .costs
            .down_rate_per_hour
            .get(scenario)
            .ok_or_else(|| CliError::Config(format!("unknown scenario {scenario:?}")))?;
        let mut params = CostParams::uniform(
            system,
            self.costs.inspection,
            self.costs.restore_to_first_phase,
            self.costs.restore_to_later_phase,
            self.costs.module_replacement,
            self.costs.system_replacement,
            per_hour * self.time_scale_hours,
        );
        for (i, m) in self.modules.iter().enumerate() {
            if let Some(c) = m.replacement_cost {
                params.module_replacement[i] = c;
            }
            for (j, u) in m.units.iter().enumerate() {
                if let Some(rc) = &u.restore_costs {
                    if rc.len() != params.restore[i][j].len() {
                        return Err(CliError::Config(format!(
                            "module {:?}, unit {:?}: {} restore costs for {} phases",
                            m.name,
                            u.name,
                            rc.len(),
                            params.restore[i][j].len()
                        )));
                    }
                    params.restore[i][j] = rc.clone();
                }
            }
        }
        params.down_cost_form = match &self.costs.down_cost_form {
            DownCostFormConfig::Linear => DownCostForm::Linear,
            DownCostFormConfig::Table(points) => DownCostForm::Tabulated(
                points
                    .iter()
                    .map(|(h, c)| (h / self.time_scale_hours, *c))
                    .collect(),
            ),
        };
        params
            .validate(system)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn hours_to_scaled(&self, hours: f64) -> f64 {
        hours / self.time_scale_hours
    }

    pub fn scaled_to_hours(&self, scaled: f64) -> f64 {
        scaled * self.time_scale_hours
    }

    /// Useful-life horizon in scaled units (defaults to the mean lifetime).
    pub fn horizon_scaled(&self, system: &SystemModel) -> Result<f64> {
        match self.system.horizon_hours {
            Some(h) => Ok(self.hours_to_scaled(h)),
            None => Ok(system
                .lifetime_ph()
                .map_err(CliError::from_build)?
                .mean()
                .map_err(|e| CliError::Numeric(e.to_string()))?),
        }
    }

    pub fn a_rule(&self) -> InspectionRule {
        match self.simulation.a_rule {
            ARuleConfig::Ceil => InspectionRule::CeilHorizon,
            ARuleConfig::Round => InspectionRule::RoundHorizon,
        }
    }

    pub fn accounting(&self) -> Accounting {
        match self.simulation.accounting {
            AccountingConfig::PerModule => Accounting::PerModule,
            AccountingConfig::Global => Accounting::Global,
        }
    }

    pub fn expectation_form(&self) -> ExpectationForm {
        match self.simulation.u2_weighting {
            WeightingConfig::Verbatim => ExpectationForm::Verbatim,
            WeightingConfig::Joint => ExpectationForm::Joint,
        }
    }
}

/// Deserializes with a JSON pointer in the error message, so schema mistakes
/// point at the offending field.
fn serde_path_to_error<'de, T: Deserialize<'de>>(
    de: &mut serde_json::Deserializer<serde_json::de::StrRead<'de>>,
    path: &Path,
) -> Result<T> {
    T::deserialize(de).map_err(|e| {
        CliError::Config(format!(
            "{} at line {}, column {}: {}",
            path.display(),
            e.line(),
            e.column(),
            e
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_lifetimes() {
        let exp = parse_named_lifetime("exp(1.82)", "test").unwrap();
        assert_eq!(exp.order(), 1);
        let erl = parse_named_lifetime("erlang(2, 6.304)", "test").unwrap();
        assert_eq!(erl.order(), 2);
        assert!(parse_named_lifetime("weibull(2)", "test").is_err());
        assert!(parse_named_lifetime("exp", "test").is_err());
    }
}
