//! End-to-end tests of the `moma` binary: exit codes, output files,
//! determinism and the analytic/Monte-Carlo cross-check.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use moma_cli::{ConfigFile, ModelDump};

fn sem_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples/sem-bop/config.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A small two-module system that simulates quickly.
fn toy_config_json(replications: usize, seed: u64, down_rate: f64) -> String {
    format!(
        r#"{{
  "time_scale_hours": 1.0,
  "system": {{ "structure": "series", "horizon_hours": 1.0 }},
  "modules": [
    {{
      "name": "alpha",
      "structure": {{ "k_out_of_n": 2 }},
      "units": [
        {{ "name": "a1", "lifetime": "exp(1.6)" }},
        {{ "name": "a2", "lifetime": "exp(1.6)" }},
        {{ "name": "a3", "lifetime": "exp(1.6)" }}
      ]
    }},
    {{
      "name": "beta",
      "structure": "parallel",
      "units": [
        {{ "name": "b1", "lifetime": "erlang(2, 4.0)", "repair_law": [0.5, 0.5] }},
        {{ "name": "b2", "lifetime": "erlang(2, 4.0)", "repair_law": [0.5, 0.5] }}
      ]
    }}
  ],
  "costs": {{
    "inspection": 1.0,
    "restore_to_first_phase": 1.0,
    "restore_to_later_phase": 0.5,
    "module_replacement": 3.0,
    "system_replacement": 9.0,
    "down_rate_per_hour": {{ "base": {down_rate} }}
  }},
  "simulation": {{
    "replications": {replications},
    "grid_size": 10,
    "tau_max_hours": 0.5,
    "seed": {seed},
    "a_rule": "ceil",
    "accounting": "global",
    "u2_weighting": "joint",
    "multi_cycle": false
  }}
}}"#
    )
}

#[test]
fn build_reports_expected_state_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--config",
        sem_config_path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "build",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("operative states: 512 (4 optimal, 508 critical)"),
        "{text}"
    );
    assert!(dir.path().join("model.json").exists());
    assert!(dir.path().join("q_sys.txt").exists());
    assert!(dir.path().join("build_summary.json").exists());

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("build_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["payload"]["operative_states"], 512);
    assert_eq!(summary["payload"]["pre_aggregation_down_states"], 613);
}

#[test]
fn model_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--config",
        sem_config_path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "build",
    ]);
    assert!(out.status.success());

    let config = ConfigFile::load(&sem_config_path()).unwrap();
    let rebuilt = ModelDump::from_system(&config.build_system().unwrap());
    let loaded = ModelDump::load(&dir.path().join("model.json")).unwrap();
    assert_eq!(rebuilt, loaded);
}

#[test]
fn reliability_curve_starts_at_one_and_never_increases() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--config",
        sem_config_path().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "reliability",
        "--grid",
        "40",
        "--tmax",
        "80000",
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("reliability.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 41);
    assert!((values[0] - 1.0).abs() < 1e-12);
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    let text = stdout(&out);
    assert!(text.contains("mean lifetime"));
    // Mean within 2% of 24000 hours.
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("reliability_summary.json")).unwrap(),
    )
    .unwrap();
    let mean = summary["payload"]["mean_lifetime_hours"].as_f64().unwrap();
    assert!((mean - 24000.0).abs() / 24000.0 < 0.02, "mean {mean}");
}

#[test]
fn single_unit_config_builds_two_state_generator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("single.json");
    std::fs::write(
        &cfg,
        r#"{
  "time_scale_hours": 1.0,
  "system": { "structure": "series", "horizon_hours": 1.0 },
  "modules": [
    { "name": "solo", "structure": "series",
      "units": [ { "name": "u", "lifetime": "exp(2.0)" } ] }
  ],
  "costs": {
    "inspection": 1.0, "restore_to_first_phase": 1.0,
    "restore_to_later_phase": 0.5, "module_replacement": 3.0,
    "system_replacement": 9.0, "down_rate_per_hour": { "base": 0.0 }
  },
  "simulation": { "replications": 10, "grid_size": 2, "seed": 1 }
}"#,
    )
    .unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "build",
    ]);
    assert!(out.status.success());
    let q = std::fs::read_to_string(dir.path().join("out/q_sys.txt")).unwrap();
    let rows: Vec<Vec<f64>> = q
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], vec![-2.0, 2.0]);
    assert_eq!(rows[1], vec![0.0, 0.0]);
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["--config", bad.to_str().unwrap(), "build"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown field.
    let bad2 = dir.path().join("bad2.json");
    let mut doc: serde_json::Value = serde_json::from_str(&toy_config_json(10, 1, 0.0)).unwrap();
    doc["surprise"] = serde_json::json!(1);
    std::fs::write(&bad2, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["--config", bad2.to_str().unwrap(), "build"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reserved_system_shock_field_is_rejected_with_explanation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shock.json");
    let mut doc: serde_json::Value = serde_json::from_str(&toy_config_json(10, 1, 0.0)).unwrap();
    doc["system"]["system_shock"] = serde_json::json!({"d0": [[-1.0]]});
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "build"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(
        err.contains("attach a shock process to each affected module"),
        "{err}"
    );
}

#[test]
fn singular_sub_generator_exits_with_code_three_and_names_the_unit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singular.json");
    let mut doc: serde_json::Value = serde_json::from_str(&toy_config_json(10, 1, 0.0)).unwrap();
    // A conservative generator has no exit to failure: T is singular.
    doc["modules"][0]["units"][0]["lifetime"] = serde_json::json!({
        "alpha": [1.0, 0.0],
        "t": [[-1.0, 1.0], [1.0, -1.0]]
    });
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "build"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("a1"), "{err}");
}

#[test]
fn optimize_is_deterministic_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.json");
    std::fs::write(&cfg, toy_config_json(500, 99, 5.0)).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "optimize",
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read_to_string(out_a.join("optimize.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("optimize.csv")).unwrap();
    assert_eq!(a, b);

    // A different seed gives a different estimate.
    let out_c = dir.path().join("c");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--seed",
        "12345",
        "optimize",
    ]);
    assert!(out.status.success());
    let c = std::fs::read_to_string(out_c.join("optimize.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn analytic_and_montecarlo_curves_agree_within_four_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.json");
    std::fs::write(&cfg, toy_config_json(20_000, 31, 3.0)).unwrap();
    for method in ["analytic", "montecarlo"] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join(method).to_str().unwrap(),
            "cost-curve",
            "--method",
            method,
        ]);
        assert!(
            out.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Columns: tau_hours, tau_scaled, inspections, objective, std_error,
    // avg_cycle_cost. The Monte-Carlo average simulates the first cycle; the
    // analytic avg_cycle_cost is the expected first-cycle cost, so those two
    // agree within sampling error. The objectives measure different horizons
    // (first-cycle extrapolation vs the full cycle recursion), so they are
    // compared through their minima instead.
    let parse = |p: PathBuf| -> Vec<Vec<f64>> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    let analytic = parse(dir.path().join("analytic/cost_curve_base_analytic.csv"));
    let mc = parse(dir.path().join("montecarlo/cost_curve_base_montecarlo.csv"));
    assert_eq!(analytic.len(), mc.len());
    for (a, m) in analytic.iter().zip(&mc) {
        assert!((a[0] - m[0]).abs() < 1e-9);
        let inspections = m[2];
        let cycle_se = m[4] / inspections;
        assert!(
            (a[5] - m[5]).abs() <= 4.0 * cycle_se + 1e-9,
            "tau {}: analytic cycle cost {} vs mc {} (se {cycle_se})",
            a[0],
            a[5],
            m[5]
        );
    }
    // Cross-method argmin proximity: within two grid steps.
    let argmin = |rows: &[Vec<f64>]| {
        rows.iter()
            .enumerate()
            .min_by(|x, y| x.1[3].total_cmp(&y.1[3]).then(y.0.cmp(&x.0)))
            .unwrap()
            .0 as i64
    };
    assert!((argmin(&analytic) - argmin(&mc)).abs() <= 2);
}

#[test]
fn zero_down_rate_pushes_the_optimum_to_the_largest_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.json");
    std::fs::write(&cfg, toy_config_json(100, 7, 0.0)).unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("sweep").to_str().unwrap(),
        "cost-curve",
        "--method",
        "analytic",
    ]);
    assert!(out.status.success());
    let csv =
        std::fs::read_to_string(dir.path().join("sweep/cost_curve_base_analytic.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
        .unwrap();
    assert!((best.1 .0 - 0.5).abs() < 1e-9, "optimum at {}", best.1 .0);
}

#[test]
fn multi_cycle_flag_changes_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.json");
    std::fs::write(&cfg, toy_config_json(400, 11, 5.0)).unwrap();
    let single = dir.path().join("single");
    let multi = dir.path().join("multi");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        single.to_str().unwrap(),
        "optimize",
    ]);
    assert!(out.status.success());
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        multi.to_str().unwrap(),
        "--multi-cycle",
        "optimize",
    ]);
    assert!(out.status.success());
    let a = std::fs::read_to_string(single.join("optimize.csv")).unwrap();
    let b = std::fs::read_to_string(multi.join("optimize.csv")).unwrap();
    assert_ne!(a, b);
}
