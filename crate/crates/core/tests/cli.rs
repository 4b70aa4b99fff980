use std::path::Path;
use std::process::Command;

use serde_json::Value;
use solvrigid::config::RunConfig;
use solvrigid::Error;

const DEFAULT: &str = include_str!("../configs/default.json");

fn config_error(text: &str) -> (String, String) {
    match RunConfig::from_json(text) {
        Err(Error::Config { path, message }) => (path, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn bundled_config_is_the_default() {
    let cfg = RunConfig::from_json(DEFAULT).unwrap();
    let a: Value = serde_json::from_str(&cfg.to_json()).unwrap();
    let b: Value = serde_json::from_str(&RunConfig::default().to_json()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_round_trip() {
    let cfg = RunConfig::from_json(DEFAULT).unwrap();
    let emitted = cfg.to_json();
    let again = RunConfig::from_json(&emitted).unwrap();
    let a: Value = serde_json::from_str(&emitted).unwrap();
    let b: Value = serde_json::from_str(&again.to_json()).unwrap();
    assert_eq!(a, b);
    assert_eq!(RunConfig::from_json("{}").unwrap().to_json(), RunConfig::default().to_json());
}

#[test]
fn unknown_keys_are_pointed_at() {
    let (path, message) = config_error(r#"{"metric": {"tripels": 5}}"#);
    assert!(path.starts_with("metric"), "{path}");
    assert!(message.contains("tripels"), "{message}");

    let bad = r#"{"classify": {"cases": [{"name": "x", "map": {"kind": "block", "map": {
        "spec": {"alphas": [1.0], "mults": [1]},
        "components": [{"op": "sin", "arg": {"op": "project", "block": 0}, "extra": 1}]}}}]}}"#;
    let (path, _) = config_error(bad);
    assert!(path.starts_with("classify.cases[0].map"), "{path}");

    let (path, message) = config_error(r#"{"sed": 1}"#);
    assert_eq!(path, "sed");
    assert!(message.contains("unknown field"), "{message}");
}

#[test]
fn semantic_errors_are_pointed_at() {
    let (path, _) = config_error(r#"{"metric": {"triples": 0}}"#);
    assert_eq!(path, "metric.triples");
    let (path, _) = config_error(r#"{"metric": {"specs": [{"name": "bad", "spec": {"alphas": [2.0, 1.0], "mults": [1, 1]}}]}}"#);
    assert!(path.starts_with("metric.specs[0]"), "{path}");
}

fn solvrigid(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_solvrigid")).args(args).arg("--out").arg(out).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(stdout: &[u8]) -> Value {
    let path = String::from_utf8_lossy(stdout).trim().to_string();
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cli_passes_and_overrides_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"seed": 3, "metric": {"triples": 200}}"#);
    let out = solvrigid(&["metric", "--config", &cfg, "--seed", "9"], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out.stdout);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["pass"], true);
    assert_eq!(r["sections"][0]["name"], "metric");
    let name = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let bytes = std::fs::read(&name).unwrap();
    assert!(name.ends_with(&format!("report-{}.json", solvrigid::report::sha256_hex(&bytes))));
}

#[test]
fn cli_failure_still_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"classify": {"pairs": 300, "probes": 10, "cases": [{"name": "mislabelled", "expect": "sim", "map": {"kind": "sim", "map": {
            "spec": {"alphas": [1.0, 2.0], "mults": [1, 1]}, "stretch": 1.0,
            "rotations": [[[1.0]], [[1.0]]], "translations": [[0.0], [0.0]]}}}],
            "homomorphisms": {"composites": 10}}}"#,
    );
    let out = solvrigid(&["classify", "--config", &cfg], &tmp.path().join("out"));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "{stderr}");

    let cfg = write(tmp.path(), "d.json", &std::fs::read_to_string(&cfg).unwrap().replace("\"expect\": \"sim\"", "\"expect\": \"qsim\""));
    let out = solvrigid(&["classify", "--config", &cfg], &tmp.path().join("out"));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(1), "{stderr}");
    assert!(stderr.contains("class[mislabelled]"), "{stderr}");
    let r = report(&out.stdout);
    assert_eq!(r["pass"], false);
}

#[test]
fn cli_config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"geodesic": {"pairs": 10, "bogus": true}}"#);
    let out = solvrigid(&["geodesic", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("geodesic") && stderr.contains("bogus"), "{stderr}");
    assert!(!tmp.path().join("out").exists());

    let out = solvrigid(&["roots", "--config", "/nonexistent.json"], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}
