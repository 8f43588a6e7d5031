use std::path::Path;
use std::process::{Command, Output};

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .env_remove("CVQKD_WORKERS")
        .output()
        .expect("binary runs")
}

fn sweep_to(path: &Path, args: &[&str], workers: &str) -> Vec<u8> {
    let mut all = args.to_vec();
    all.extend(["--workers", workers, "--output", path.to_str().unwrap()]);
    let out = cvqkd(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(path).unwrap()
}

fn same_output_across_workers(args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let one = sweep_to(&dir.path().join("one.csv"), args, "1");
    let four = sweep_to(&dir.path().join("four.csv"), args, "4");
    assert!(!one.is_empty());
    assert_eq!(one, four);
}

#[test]
fn averaging_sweep_is_worker_independent() {
    same_output_across_workers(&[
        "--protocol", "ua", "--sigma", "0.2", "--ua-copies", "2", "--mc-samples", "64",
        "--distance", "0:200:5", "--optimize-r",
    ]);
}

#[test]
fn relay_sweep_is_worker_independent() {
    same_output_across_workers(&[
        "--protocol", "nla", "--sigma", "0.1", "--mc-samples", "8", "--r", "0.2",
        "--distance", "50:250:3",
    ]);
}

#[test]
fn env_var_sets_default_workers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.csv");
    let args = ["--protocol", "phase", "--sigma", "0.1", "--mc-samples", "32", "--distance", "0:100:3"];
    let out = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .args(["--output", path.to_str().unwrap()])
        .env("CVQKD_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let reference = sweep_to(&dir.path().join("ref.csv"), &args, "1");
    assert_eq!(std::fs::read(&path).unwrap(), reference);

    let bad = Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .env("CVQKD_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_2() {
    assert_eq!(cvqkd(&["--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(cvqkd(&["--protocol", "baseline", "--sigma", "0.1"]).status.code(), Some(2));
    assert_eq!(cvqkd(&["--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn all_rows_failing_exits_3() {
    // Squeezing this strong leaks far past the default tolerance at the relay cutoff.
    let out = cvqkd(&["--protocol", "nla", "--r", "1.2", "--distance", "10:20:2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let out = cvqkd(&["--protocol", "baseline", "--distance", "0:10:2", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(cvqkd(&["--config", dir.path().join("nope.json").to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn cli_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"protocol": "phase", "sigma": 0.3, "mc_samples": 16, "distance_start_km": 0,
            "distance_end_km": 40, "n_points": 3, "format": "json"}"#,
    )
    .unwrap();
    let out = cvqkd(&["--config", config.to_str().unwrap(), "--sigma", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["sigma"], 0.1);
    assert_eq!(doc["config"]["protocol"], "phase");
    assert_eq!(doc["config"]["mc_samples"], 16);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["distance_km"], 40.0);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"sigmaa": 0.1}"#).unwrap();
    let out = cvqkd(&["--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigmaa"));
}

#[test]
fn csv_header_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--protocol", "ua", "--sigma", "0.15", "--mc-samples", "16", "--distance", "0:60:4"];
    let first = sweep_to(&dir.path().join("a.csv"), &args, "2");
    let text = String::from_utf8(first.clone()).unwrap();
    let doc: serde_json::Map<String, serde_json::Value> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), serde_json::from_str(v).unwrap())
        })
        .collect();
    let config = dir.path().join("replay.json");
    std::fs::write(&config, serde_json::to_string(&doc).unwrap()).unwrap();
    let replay = sweep_to(&dir.path().join("b.csv"), &["--config", config.to_str().unwrap()], "1");
    assert_eq!(first, replay);
}
