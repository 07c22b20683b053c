use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnetic-hardy"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn identity_check_residual_is_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["identity-check", "--r0", "e", "--grid", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["payload"]["max_residual"].as_f64().unwrap() < 1e-10);
    assert!(r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn flux_of_first_example_at_e_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["flux", "--field", "example1", "--b0", "1", "--gamma", "2", "--t", "-2"]);
    assert_eq!(out.status.code(), Some(0));
    let alpha = report(&out)["payload"]["alpha"].as_f64().unwrap();
    assert!((alpha - 0.5).abs() < 1e-9, "alpha = {alpha}");
}

#[test]
fn zero_coupling_has_no_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["count", "--potential", "vsigma", "--sigma", "2", "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["payload"]["total"].as_u64(), Some(0));
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["count", "--potential", "gaussian_well", "--depth", "20", "--lambda", "1", "--t-min", "-3", "--t-max", "2"];
    let a = report(&run(dir.path(), &args));
    let b = report(&run(dir.path(), &args));
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(serde_json::to_string(&a["payload"]).unwrap(), serde_json::to_string(&b["payload"]).unwrap());
    assert_eq!(a["warnings"], b["warnings"]);
}

#[test]
fn report_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), &["hardy", "--field", "bump", "--total-flux", "0.5", "--grid", "201"]);
    assert_eq!(first.status.code(), Some(0));
    let r1 = report(&first);
    let file = r1["files"].as_array().unwrap().iter().find(|f| f.as_str().unwrap().ends_with(".json")).unwrap();
    let path = dir.path().join(file.as_str().unwrap());
    let second = run(dir.path(), &["hardy", "--config", path.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    let r2 = report(&second);
    assert_eq!(r1["config"], r2["config"]);
    assert_eq!(r1["config_hash"], r2["config_hash"]);
    assert_eq!(r1["payload"], r2["payload"]);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[field]\nkindx = \"bump\"\n").unwrap();
    let out = run(dir.path(), &["flux", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kindx"), "{err}");
}

#[test]
fn csv_has_header_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["hardy", "--grid", "201"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let csv = r["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).find(|f| f.ends_with(".csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join(csv)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,mu"));
    let row = lines.next().unwrap();
    let mu = row.split(',').nth(1).unwrap();
    let mantissa = mu.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{mu}");
    assert!(mu.parse::<f64>().unwrap().is_finite());
}

#[test]
fn warnings_set_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["count", "--potential", "gaussian_well", "--depth", "20", "--lambda", "1", "--t-min", "-3", "--t-max", "2"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!report(&out)["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep", "--lambdas", "10,x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambdas"));
}

#[test]
fn list_flags_accept_commas() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["probe-zero", "--field", "bump", "--b", "1.5", "--alpha", "0.4", "--cuts", "8,16,32"]);
    assert!(matches!(out.status.code(), Some(0 | 2)));
    assert_eq!(report(&out)["payload"]["rows"].as_array().unwrap().len(), 3);
}
