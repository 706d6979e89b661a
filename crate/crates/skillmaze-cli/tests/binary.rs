//! The shipped binary: exit codes, machine-readable errors, and a full
//! pretrain -> plot -> diag pass through the real executable.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn skillmaze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillmaze"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_line(output: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line)
        .unwrap_or_else(|_| panic!("stderr is not a JSON error line: {stderr:?}"))
}

#[test]
fn usage_errors_exit_nonzero_with_a_json_error_line() {
    let out = skillmaze(&["pretrain", "--no-such-flag"]);
    assert!(!out.status.success());
    let err = error_line(&out);
    assert!(err["error"].as_str().unwrap().contains("--no-such-flag"));
}

#[test]
fn config_errors_exit_nonzero_with_a_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "kapa = 0.5\n").unwrap();
    let out = skillmaze(&["pretrain", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = error_line(&out);
    assert!(err["error"].as_str().unwrap().contains("kapa"));

    let missing = dir.path().join("nope.txt");
    let out = skillmaze(&["pretrain", "--config", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(error_line(&out)["error"].as_str().unwrap().contains("nope.txt"));
}

#[test]
fn pretrain_plot_diag_pass_through_the_executable() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::write_tiny_config(dir.path(), &[]);
    let config = config.to_str().unwrap();
    let run_dir = dir.path().join("run");

    let out = skillmaze(&["pretrain", "--config", config]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("seed-5").join("checkpoint.json").is_file());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed 5"), "{stdout}");

    let out = skillmaze(&["plot", "--config", config]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("seed-5").join("trajectories.svg").is_file());

    let out = skillmaze(&[
        "diag",
        "--run",
        run_dir.to_str().unwrap(),
        "--mine-steps",
        "40",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("coverage") && table.contains("becl"), "{table}");
    assert!(run_dir.join("seed-5").join("diag.json").is_file());
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::write_tiny_config(dir.path(), &[("seeds", "1,2")]);
    let out = skillmaze(&["pretrain", "--config", config.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.path().join("run");
    assert!(run_dir.join("seed-9").is_dir());
    assert!(!run_dir.join("seed-1").exists());
    assert!(!run_dir.join("seed-2").exists());
}

#[test]
fn synthetic_diagnostics_print_a_json_report() {
    let out = skillmaze(&["diag", "--synthetic", "--seed", "3"]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    assert!(report["bound_margin"].as_f64().unwrap() >= 0.0);
    assert!(report["identity_gap"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["limit_gaps"].as_array().unwrap().len(), 4);
}

#[test]
fn plot_without_data_reports_missing_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.txt"),
        common::tiny_config_text(Path::new("unused"), &[]),
    )
    .unwrap();
    let out = skillmaze(&["plot", "--run", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(error_line(&out)["error"]
        .as_str()
        .unwrap()
        .contains("trajectories.csv"));
}
