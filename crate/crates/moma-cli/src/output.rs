use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use markov_core::Matrix;
use moma_builder::SystemModel;

use crate::error::Result;

/// Machine-readable run envelope: the payload is a pure function of (config,
/// seed); timing and versions sit outside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultBundle<P: Serialize> {
    pub command: String,
    pub version: String,
    pub config_path: String,
    pub seed: Option<u64>,
    pub elapsed_ms: u128,
    pub payload: P,
}

impl<P: Serialize> ResultBundle<P> {
    pub fn new(command: &str, config_path: &Path, seed: Option<u64>, payload: P) -> Self {
        ResultBundle {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_path: config_path.display().to_string(),
            seed,
            elapsed_ms: 0,
            payload,
        }
    }

    pub fn write(&self, out_dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(out_dir)?;
        let path = out_dir.join(name);
        let file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(file, self)
            .map_err(|e| crate::error::CliError::Io(e.into()))?;
        Ok(path)
    }
}

/// Exact serialization of one built module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleDump {
    pub name: String,
    pub state_labels: Vec<String>,
    pub n_optimal: usize,
    pub n_operational: usize,
    pub map_order: usize,
    pub down_tuples_aggregated: usize,
    pub q_wear: Matrix,
    pub q_ext: Matrix,
    pub alpha: Vec<f64>,
}

/// Exact serialization of a built system model; parsing this back yields the
/// same matrices bit for bit (JSON floats round-trip exactly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub modules: Vec<ModuleDump>,
    pub state_labels: Vec<String>,
    pub optimal_states: usize,
    pub critical_states: usize,
    pub operative_states: usize,
    pub pre_aggregation_down_states: usize,
    pub q_sys: Matrix,
    pub alpha_sys: Vec<f64>,
    pub replacement_law: Vec<f64>,
}

impl ModelDump {
    pub fn from_system(system: &SystemModel) -> Self {
        let modules = system
            .modules()
            .iter()
            .map(|m| ModuleDump {
                name: m.name.clone(),
                state_labels: m.ext_state_labels(),
                n_optimal: m.partition().n_optimal,
                n_operational: m.partition().n_op,
                map_order: m.map_order(),
                down_tuples_aggregated: m.down_tuple_count(),
                q_wear: m.q_wear().clone(),
                q_ext: m.q_ext().clone(),
                alpha: m.alpha_ext().entries().to_vec(),
            })
            .collect();
        ModelDump {
            modules,
            state_labels: system.state_labels().to_vec(),
            optimal_states: system.u1_count(),
            critical_states: system.u2_count(),
            operative_states: system.up_count(),
            pre_aggregation_down_states: system.pre_aggregation_down_states(),
            q_sys: system.q_sys().clone(),
            alpha_sys: system.alpha_sys().entries().to_vec(),
            replacement_law: system.beta_sys().entries().to_vec(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(out_dir)?;
        let path = out_dir.join("model.json");
        let file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(file, self)
            .map_err(|e| crate::error::CliError::Io(e.into()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| crate::error::CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Writes a matrix as a plain text fixture, one row per line, 1e-12 print
/// precision.
pub fn write_matrix_fixture(out_dir: &Path, name: &str, m: &Matrix) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut file = fs::File::create(&path)?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(file, "{}", row.join(" "))?;
    }
    Ok(path)
}

/// Writes CSV rows with a header; columns are documented in
/// docs/output-schema.md.
pub fn write_csv(
    out_dir: &Path,
    name: &str,
    header: &str,
    rows: &[Vec<String>],
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut file = fs::File::create(&path)?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(path)
}
