use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const SMALL: &str = r#"{
    "seed": 11,
    "model": {"n": 3, "m": 1, "delta": 0.005},
    "train": {"kind": "structured", "hidden_width": 8, "iterations": 50},
    "optimize": {"method": "pgda", "K": 50},
    "heatmap": {"r_axis": {"type": "interior", "count": 5, "denominator": 6}},
    "simulate": {"record_every": 50, "baseline_r": [0.0]}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_actuator-lab"))
}

fn setup(config: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn run(args: &[&str]) -> i32 {
    let out = bin().args(args).output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn structured_data_row_count() {
    let (dir, cfg) = setup(SMALL);
    let out = dir.path().join("d.csv");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 120);
    assert!(dir.path().join("d.csv.manifest.json").exists());
}

#[test]
fn two_actuator_grid_has_400_rows() {
    let (dir, cfg) = setup(r#"{"model": {"n": 10, "m": 2, "delta": 0.005}}"#);
    let out = dir.path().join("d.csv");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&out)]), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 401);
}

#[test]
fn missing_model_is_a_config_error_and_writes_nothing() {
    let (dir, cfg) = setup(r#"{"seed": 1}"#);
    let out = dir.path().join("d.csv");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&out)]), 2);
    assert!(!out.exists());
    assert!(!dir.path().join("d.csv.manifest.json").exists());
}

#[test]
fn dimension_mismatch_between_data_and_config() {
    let (dir, cfg) = setup(SMALL);
    let data = dir.path().join("d.csv");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&data)]), 0);
    let other = dir.path().join("other.json");
    std::fs::write(&other, SMALL.replace("\"n\": 3", "\"n\": 4")).unwrap();
    let bundle = dir.path().join("b.json");
    assert_eq!(run(&["train", "--config", p(&other), "--data", p(&data), "--out", p(&bundle)]), 4);
    assert!(!bundle.exists());
}

#[test]
fn placement_outside_the_domain_is_rejected() {
    let (dir, cfg) = setup(SMALL);
    let out = dir.path().join("t.csv");
    assert_eq!(run(&["simulate", "--config", p(&cfg), "--r", "4.0", "--out", p(&out)]), 2);
    assert!(!out.exists());
}

#[test]
fn zero_learning_rate_gives_flat_history() {
    let (dir, cfg) = setup(&SMALL.replace("\"iterations\": 50", "\"iterations\": 20, \"learning_rate\": 0.0"));
    let data = dir.path().join("d.csv");
    let bundle = dir.path().join("b.json");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&data)]), 0);
    assert_eq!(run(&["train", "--config", p(&cfg), "--data", p(&data), "--out", p(&bundle)]), 0);
    let loss = std::fs::read_to_string(dir.path().join("b.json.loss.csv")).unwrap();
    let values: Vec<&str> = loss.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values.len(), 21);
    assert!(values.iter().all(|v| *v == values[0]));
}

#[test]
fn heatmap_sources_and_single_point_grid() {
    let (dir, cfg) = setup(SMALL);
    let data = dir.path().join("d.csv");
    let bundle = dir.path().join("b.json");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&data)]), 0);
    assert_eq!(run(&["train", "--config", p(&cfg), "--data", p(&data), "--out", p(&bundle)]), 0);
    for source in ["exact", "surrogate", "error"] {
        let out = dir.path().join(format!("h_{source}.csv"));
        assert_eq!(
            run(&["heatmap", "--config", p(&cfg), "--source", source, "--bundle", p(&bundle), "--out", p(&out)]),
            0
        );
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "r_1,value");
        assert_eq!(text.lines().count(), 6);
    }
    let out = dir.path().join("nobundle.csv");
    assert_eq!(run(&["heatmap", "--config", p(&cfg), "--source", "surrogate", "--out", p(&out)]), 2);

    let one = dir.path().join("one.json");
    std::fs::write(&one, SMALL.replace("\"count\": 5", "\"count\": 1")).unwrap();
    let out = dir.path().join("h1.csv");
    assert_eq!(run(&["heatmap", "--config", p(&one), "--out", p(&out)]), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);
}

#[test]
fn simulate_zero_state_and_open_loop_baseline() {
    let cfg_text = SMALL.replace("\"record_every\": 50,", "\"record_every\": 50, \"z0\": [0.0, 0.0, 0.0],");
    let (dir, cfg) = setup(&cfg_text);
    let out = dir.path().join("t.csv");
    assert_eq!(run(&["simulate", "--config", p(&cfg), "--r", "1.0", "--out", p(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,z_1,z_2,z_3,u_1");
    for line in text.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0));
    }

    let (dir, cfg) = setup(SMALL);
    let out = dir.path().join("t.csv");
    assert_eq!(run(&["simulate", "--config", p(&cfg), "--r", "1.0", "--out", p(&out)]), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap()).unwrap();
    // the baseline at r = 0 is the open loop, whose slowest mode decays as e^{-t}
    let base = manifest["metrics"]["baseline_norm_at_0.7"].as_f64().unwrap();
    assert!(base > 0.05);
    assert!(manifest["metrics"]["baseline_settle_time"].is_null());
}

#[test]
fn optimize_writes_solution_and_history() {
    let (dir, cfg) = setup(SMALL);
    let data = dir.path().join("d.csv");
    let bundle = dir.path().join("b.json");
    let sol = dir.path().join("s.json");
    assert_eq!(run(&["data", "--config", p(&cfg), "--out", p(&data)]), 0);
    assert_eq!(run(&["train", "--config", p(&cfg), "--data", p(&data), "--out", p(&bundle)]), 0);
    assert_eq!(run(&["optimize", "--config", p(&cfg), "--bundle", p(&bundle), "--out", p(&sol)]), 0);
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(record["method"], "pgda");
    assert_eq!(record["iterations"], 50);
    assert_eq!(record["r"].as_array().unwrap().len(), 1);
    let history = std::fs::read_to_string(dir.path().join("s.json.history.csv")).unwrap();
    assert_eq!(history.lines().count(), 52);

    let traj = dir.path().join("t.csv");
    assert_eq!(run(&["simulate", "--config", p(&cfg), "--solution", p(&sol), "--out", p(&traj)]), 0);
}

#[test]
fn unusable_arguments_exit_with_two() {
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&["data", "--config", "/nonexistent/config.json", "--out", "/tmp/x.csv"]), 2);
}
