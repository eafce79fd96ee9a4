//! Command-line behaviour: exit codes, error paths and output formats.

use std::process::{Command, Output};

fn corrint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrint")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn temp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("corrint-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn missing_model_is_a_schema_error() {
    let o = corrint(&["extend"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.model"));
    let cfg = temp("nomodel.json");
    std::fs::write(&cfg, r#"{"eps": 0.5}"#).unwrap();
    let o = corrint(&["extend", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.model"));
}

#[test]
fn bad_config_values_name_their_key() {
    let cfg = temp("bad.json");
    std::fs::write(&cfg, r#"{"model": "circle", "search": {"probe_budget": "lots"}}"#).unwrap();
    let o = corrint(&["extend", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.search.probe_budget"), "{}", stderr(&o));
    let o = corrint(&["extend", "--model", "circle", "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config.tol"));
    let o = corrint(&["extend", "--model", "torus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_failure_exits_2_with_partial_report() {
    let report = temp("partial.json");
    let o = corrint(&["extend", "--model", "sphere-band", "--eps", "0.2", "--tol", "0.05", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["status"], "failed");
    assert!(v["error"].as_str().unwrap().contains("λ search exhausted"));
}

#[test]
fn config_file_and_flag_override() {
    let cfg = temp("loose.json");
    std::fs::write(&cfg, r#"{"model": "circle", "tol": 0.001, "max_stages": 1}"#).unwrap();
    let report = temp("loose-report.json");
    let o = corrint(&["extend", "--config", cfg.to_str().unwrap(), "--tol", "0.1", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["iteration"]["tol"], 0.1);
    assert_eq!(v["iteration"]["max_stages"], 1);
}

#[test]
fn model_listing_and_check() {
    let o = corrint(&["model", "--list"]);
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["circle", "sphere-band", "coin", "dirichlet-disk", "equator", "psi"]);
    let o = corrint(&["model", "--name", "coin", "--a", "0.5", "--check", "--grid", "17"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l.starts_with("pass") && l.ends_with("true")));
}

#[test]
fn profile_csv_shape() {
    let o = corrint(&["profile", "--s-max", "1", "--grid", "4"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "s,t,gamma1,gamma2,dt_gamma1,dt_gamma2");
    assert_eq!(lines.len(), 17);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
}

#[test]
fn verify_subcommands() {
    let o = corrint(&["verify", "--lemma", "geodesic", "--model", "plane", "--radius", "0.5"]);
    assert!(stdout(&o).contains("pass: true"));
    let o = corrint(&["verify", "--obstruction", "--psi1", "3"]);
    assert!(stdout(&o).contains("C1-extension obstructed"));
    let o = corrint(&["verify"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_corrugated_circles() {
    let obj = temp("waves.obj");
    let o = corrint(&["export", "--model", "circle", "--lambdas", "3,5", "--grid", "32", "--obj", obj.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("o ")).count(), 2);
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 64);
    assert!(text.contains("l 33 34"));
}
