use std::process::{Command, Output};

use mixcomb::harness::CSV_HEADER;

fn mixcomb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixcomb")).args(args).output().unwrap()
}

#[test]
fn simulate_writes_csv_to_stdout() {
    let out = mixcomb(&[
        "simulate", "--algo", "ucb", "--d", "5", "--m", "2", "--n", "64", "--trials", "2", "--alpha", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // Checkpoints 1, 2, ..., 32, 64 for each of two trials.
    assert_eq!(lines.count(), 2 * 7);
}

#[test]
fn simulate_json_has_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let out = mixcomb(&[
        "simulate", "--algo", "kl", "--d", "4", "--m", "2", "--n", "32", "--trials", "3", "--format", "json",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(value["trials"].as_array().unwrap().len(), 3);
    assert!(!value["summary"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_exit_with_two() {
    // Full-bandit play on a mixed-size family.
    let out = mixcomb(&["simulate", "--algo", "kl", "--family", "restricted", "--d0", "3", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    // m larger than d.
    let out = mixcomb(&["simulate", "--algo", "ucb", "--d", "3", "--m", "4", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing required flag for the family.
    let out = mixcomb(&["inspect-family", "--family", "uniform-matroid", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
    // Unparseable arguments.
    let out = mixcomb(&["simulate", "--algo", "nope", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_three() {
    let out = mixcomb(&[
        "simulate", "--algo", "ucb", "--d", "4", "--m", "2", "--n", "16", "--trials", "1",
        "--out", "/nonexistent-dir/run.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn inspect_family_reports_constants() {
    let out = mixcomb(&["inspect-family", "--d", "8", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("|M|: 56"));
    assert!(text.contains("rho_min: 0.375"));
    assert!(text.contains("M_KL: [1, 2, 3, 4, 5, 6, 7, 8]"));

    let out = mixcomb(&["inspect-family", "--family", "restricted", "--d0", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("M_KL: [1, 2]"));
    assert!(text.contains("m: mixed"));
}

#[test]
fn alpha_above_half_warns_for_kl() {
    let out = mixcomb(&["simulate", "--algo", "kl", "--d", "4", "--m", "2", "--n", "16", "--trials", "2", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("warning:"), "{err}");
    assert!(err.contains("(2 trials)"), "{err}");
}
