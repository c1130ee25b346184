use std::path::Path;
use std::process::{Command, Output};

fn admctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admctl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{
    "S": 8, "c": 2, "mu": 0.5,
    "classes": [{"R": 10, "gamma": 0.2, "lambda": 0.6}, {"R": 4, "gamma": 0.2, "lambda": 0.6}],
    "lambda_min": 0.5, "lambda_max": 2, "t1": 20, "episodes": 4, "seeds": 2
}"#;

#[test]
fn missing_config_is_a_usage_error() {
    let out = admctl(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn diameter_of_small_single_server_queue() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"S": 3, "c": 1, "mu": 2, "classes": [{"R": 1, "gamma": 0, "lambda": 1}], "lambda_min": 1, "lambda_max": 1}"#,
    );
    let out = admctl(&["diameter", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4.6667");
}

#[test]
fn solve_prints_policy_and_gain() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    for solver in [&["--solver", "pi"][..], &["--solver", "vi", "--eps", "1e-6"][..]] {
        let mut args = vec!["solve", "--config", &config];
        args.extend_from_slice(solver);
        let out = admctl(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(report["rho"].as_f64().unwrap() > 0.0);
        assert_eq!(report["nabla_h"].as_array().unwrap().len(), 8);
        assert_eq!(report["thresholds"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn learn_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("run");
    let out = admctl(&["learn", "--config", &config, "--seed", "5", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["regret_seed_0.csv", "regret_seed_1.csv", "regret_agg.csv", "episodes.csv", "bound.csv", "meta.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
}

#[test]
fn bounds_and_simulate_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = admctl(&["bounds", "--config", &config, "--points", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().next(), Some("T,bound"));
    assert_eq!(text.lines().count(), 6);

    let out = admctl(&["simulate", "--config", &config, "--thresholds", "8,4", "--horizon", "1000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["thresholds"], serde_json::json!([8, 4]));
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"S": 3, "c": 1, "mu": "fast", "classes": [], "lambda_min": 1, "lambda_max": 1}"#);
    let out = admctl(&["solve", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu"));
}
