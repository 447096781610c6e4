use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn surropt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surropt")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn toy_config(out: &Path, extra: &str) -> String {
    format!(
        r#"{{"schema_version": 1, "simulator": {{"kind": "toy"}}, "initial_samples": 200,
            "output_dir": {:?} {extra}}}"#,
        out.to_str().unwrap()
    )
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_reaches_goal_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = serde_json::json!({
        "schema_version": 1,
        "simulator": {"kind": "toy"},
        "stopping": {"goal_loss": 0.05, "max_iterations": 15},
        "output_dir": out,
    });
    let config = write_config(dir.path(), &body.to_string());
    let res = surropt(&["run", "--config", &config]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert_eq!(s["stop_reason"], "goal");
    assert!(s["true_loss"].as_f64().unwrap() <= 0.05);
    assert_eq!(s["initial_queries"], 400);
    for file in ["initial.csv", "dataset.csv", "runlog.jsonl", "model.json"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let log = std::fs::read_to_string(out.join("runlog.jsonl")).unwrap();
    assert_eq!(log.lines().count() as u64, s["iterations"].as_u64().unwrap());
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &toy_config(&out, r#", "stopping": {"max_iterations": 0}"#));
    let res = surropt(&["run", "--config", &config]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(summary(&out)["stop_reason"], "max-iterations");
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"schema_version": 1, "simulator": {"kind": "toy"}, "sead": 4}"#,
    );
    let res = surropt(&["run", "--config", &config]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("sead"));

    let broken = write_config(dir.path(), r#"{"schema_version": 1,"#);
    assert_eq!(surropt(&["run", "--config", &broken]).status.code(), Some(1));
    assert_eq!(
        surropt(&["run", "--config", "/nonexistent/config.json"]).status.code(),
        Some(1)
    );
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(surropt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(surropt(&["run"]).status.code(), Some(1));
    assert_eq!(surropt(&["--help"]).status.code(), Some(0));
}

#[test]
fn zero_sample_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &toy_config(&dir.path().join("out"), ""));
    let res = surropt(&["sample", "--config", &config, "--count", "0"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn resume_reuses_the_initial_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &toy_config(&out, r#", "stopping": {"max_iterations": 1}"#));
    assert_eq!(
        surropt(&["sample", "--config", &config, "--count", "60"]).status.code(),
        Some(0)
    );
    let res = surropt(&["run", "--config", &config, "--resume", "--seed", "3"]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert_eq!(s["initial_queries"], 0);
    assert_eq!(s["initial_records"], 60);
    assert_eq!(s["total_queries"], 1);
    assert_eq!(s["seed"], 3);

    let empty = dir.path().join("empty");
    let res = surropt(&["run", "--config", &config, "--resume", "--out", empty.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn landscape_study_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &toy_config(&out, r#", "train": {"max_epochs": 20}"#));
    let res = surropt(&[
        "study",
        "landscape",
        "--config",
        &config,
        "--dims",
        "5,2",
        "--resolution",
        "5",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let mut reader = csv::Reader::from_path(out.join("landscape.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["i", "j", "x_6", "x_3", "surrogate_loss", "true_loss"]
    );
    assert_eq!(reader.records().count(), 25);
}
