use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_consistency-lab");

const CONSISTENCY: &str = r#"{"schema_version": 1, "scenario": "consistency", "truth": {"family": "uniform"},
  "prior": {"family": "discrete", "atoms": [{"family": "uniform"}, {"family": "linear"}], "weights": [0.5, 0.5]},
  "n": 40, "epsilon": 0.3, "seed": 17}"#;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn divergence_prints_six_decimals() {
    let out = run(&["divergence", "--f", "uniform", "--g", "2x", "--metric", "hellinger-h"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.057191");
    let out = run(&["divergence", "--f", "2x", "--g", "uniform", "--metric", "chi2"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "inf");
}

#[test]
fn bad_input_exits_with_config_code() {
    assert_eq!(run(&["simulate", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "scenario": "consistency", "seed": 1}"#).unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prior"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, CONSISTENCY).unwrap();
    let mut outputs = Vec::new();
    for run_dir in ["a", "b"] {
        let out_dir = dir.path().join(run_dir);
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(out_dir.join("consistency.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let reseeded = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "18"]);
    assert_ne!(reseeded.stdout, outputs[0]);
}

#[test]
fn summability_json_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"schema_version": 1, "scenario": "summability",
            "prior": {"family": "mass_schedule", "schedule": {"family": "polynomial", "exponent": 2}}, "seed": 0}"#,
    )
    .unwrap();
    let out = run(&["summability", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reports"][0]["verdict"]["verdict"], "divergent");
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = consistency_lab::experiments::ExperimentConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}
