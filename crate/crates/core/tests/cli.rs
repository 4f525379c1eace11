use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nllab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nllab")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn constants_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["constants", "--N", "1,2", "--p", "1,2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,p,value,method");
    assert_eq!(lines.len(), 5);
    let pi: f64 = lines[4].split(',').nth(2).unwrap().parse().unwrap();
    assert!((pi - std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn eval_prints_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["eval", "--field", "const", "--family", "bn", "--delta", "0.5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"].as_f64(), Some(0.0));
    assert_eq!(v["family"], "bn");
}

#[test]
fn invalid_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let zero_gamma = nllab(dir.path(), &["eval", "--family", "bsvy", "--gamma", "0", "--lambda", "1"]);
    assert_eq!(zero_gamma.status.code(), Some(2));
    let unknown = nllab(dir.path(), &["eval", "--field", "nope", "--family", "bn", "--delta", "1"]);
    assert_eq!(unknown.status.code(), Some(3));
    std::fs::write(dir.path().join("bad.json"), "{\"colour\": 1}").unwrap();
    let bad = nllab(dir.path(), &["eval", "--config", "bad.json"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("malformed config"));
}

#[test]
fn diverged_sweep_exits_with_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["sweep", "--field", "step1d", "--family", "bsvy", "--p", "1", "--gamma", "-1", "--out", "run"]);
    assert_eq!(o.status.code(), Some(6));
    assert!(dir.path().join("run/manifest.json").exists());
}

#[test]
fn sweep_artifacts_round_trip_into_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["sweep", "--field", "gauss1d", "--family", "bbm", "--p", "2", "--plot", "--out", "bbm"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("bbm");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["summary"]["pass"], true);
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 6);
    let csv = std::fs::read_to_string(run.join("results.csv")).unwrap();
    assert!(csv.starts_with("index,param,seed,value,error,diverged"));
    assert_eq!(csv.lines().count(), 7);
    assert!(std::fs::read_to_string(run.join("plot.svg")).unwrap().starts_with("<svg"));

    // a config file written from the manifest reproduces the run
    std::fs::write(dir.path().join("again.json"), manifest["config"].to_string()).unwrap();
    let again = nllab(dir.path(), &["sweep", "--config", "again.json", "--out", "again"]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(dir.path().join("again/results.csv")).unwrap(), csv.as_bytes());

    let o = nllab(dir.path(), &["sweep", "--field", "step1d", "--family", "bsvy", "--p", "1", "--gamma", "-1", "--out", "div"]);
    assert_eq!(o.status.code(), Some(6));
    let report = nllab(dir.path(), &["report", "bbm", "div", "missing", "--format", "csv"]);
    assert!(report.status.success());
    let text = stdout(&report);
    let status: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(status, ["unreadable", "n/a", "pass"]);
}

#[test]
fn empty_report_has_only_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["report"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn oracle_and_scan_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = nllab(dir.path(), &["oracle", "--p", "1", "--gamma", "1", "--lambda", "10"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"].as_f64(), Some(2.0));
    let s = nllab(dir.path(), &["scan", "--p", "1", "--gamma", "-2,1", "--out", "scan"]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    assert!(dir.path().join("scan/results.csv").exists());
}
