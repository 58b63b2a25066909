use std::path::Path;
use std::process::{Command, Output};

fn zne(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_zne")).args(args).output().expect("binary runs");
    assert!(out.status.success(), "zne {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

const SMALL: [&str; 8] = ["--runs", "6", "--twirls", "2", "--shots", "200", "--eps-shots", "1000"];

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--benchmark", "grover", "--methods", "sZNE,ASF-B,IC-ZNE", "--out", out];
    args.extend(SMALL);
    let stdout = String::from_utf8(zne(&args).stdout).unwrap();
    assert!(stdout.contains("ASF-B"));
    for f in ["runs.json", "report.json", "report.csv", "samples.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    // sZNE and ASF-B each take the three 1D filters; IC-ZNE also the two 2D ones.
    assert_eq!(rows(&dir.path().join("report.csv")), 3 + 3 + 5);

    let again = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.json");
    zne(&["report", runs.to_str().unwrap(), "--methods", "sZNE", "--filters", "none", "--out", again.path().to_str().unwrap()]);
    assert_eq!(rows(&again.path().join("report.csv")), 1);
    let first = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let second = std::fs::read_to_string(again.path().join("report.csv")).unwrap();
    assert_eq!(first.lines().nth(1), second.lines().nth(1));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep-xi", "--grid", "0.1,0.25", "--methods", "ASF-B", "--filters", "none", "--out", dir.path().to_str().unwrap()];
    args.extend(SMALL);
    zne(&args);
    assert_eq!(rows(&dir.path().join("sweep.csv")), 2);
}

#[test]
fn profile_file_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.json");
    std::fs::write(&profile, r#"{"uniform_cx_error": 0.02, "drift_sigma": 0.0, "outlier_prob": 0.0}"#).unwrap();
    let mut args = vec!["run", "--benchmark", "hhl", "--methods", "sZNE", "--filters", "none", "--noise-profile", profile.to_str().unwrap()];
    let out = dir.path().join("out");
    args.extend(["--out", out.to_str().unwrap()]);
    args.extend(SMALL);
    zne(&args);

    let bad = Command::new(env!("CARGO_BIN_EXE_zne")).args(["run", "--methods", "ZNE"]).output().unwrap();
    assert!(!bad.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_zne")).args(["report", "/nonexistent/runs.json"]).output().unwrap();
    assert!(!bad.status.success());
}
