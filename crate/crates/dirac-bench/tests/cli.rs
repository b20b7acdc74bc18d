//! Black-box checks of the command-line interface: exit codes, output
//! files, and that a rerun of the same scenario is byte-identical.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirac-bench"))
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("dirac-bench-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn write(dir: &PathBuf, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const SMALL_SPECTRUM: &str = r#"{
  "name": "cli-small",
  "seed": 5,
  "geometry": { "torus": { "lx": 6.283185307179586, "ly": 6.283185307179586, "n1": 16, "n2": 16 } },
  "bundle": { "kind": "constant-curvature", "c1": -1 },
  "tasks": ["spectrum"],
  "tolerances": { "eig_tol": 1e-9 },
  "spectrum": { "count": 3 }
}"#;

#[test]
fn malformed_scenario_exits_2_and_writes_nothing() {
    let dir = tmp("malformed");
    let scen = write(&dir, "bad.json", "{ this is not json");
    let out_dir = dir.join("out");
    let out = bin()
        .args(["run", scen.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists(), "no outputs may be written on a config error");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tmp("unknown-key");
    let body = SMALL_SPECTRUM.replacen("\"seed\": 5,", "\"seed\": 5, \"sede\": 5,", 1);
    let scen = write(&dir, "typo.json", &body);
    let out = bin()
        .args(["run", scen.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let msg = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(msg.contains("sede") || msg.contains("unknown"), "stderr: {msg}");
}

#[test]
fn valid_scenario_runs_and_reruns_byte_identical() {
    let dir = tmp("rerun");
    let scen = write(&dir, "small.json", SMALL_SPECTRUM);
    let (o1, o2) = (dir.join("out1"), dir.join("out2"));
    for out_dir in [&o1, &o2] {
        let out = bin()
            .args(["run", scen.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.starts_with("pass:"), "stdout: {text}");
    }
    for name in ["cli-small-report.json", "cli-small-spectrum.csv"] {
        let a = fs::read(o1.join(name)).unwrap();
        let b = fs::read(o2.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn impossible_flux_is_a_solver_error() {
    let dir = tmp("impossible-flux");
    let body = SMALL_SPECTRUM.replacen("\"c1\": -1", "\"c1\": 1000", 1);
    let scen = write(&dir, "flux.json", &body);
    let out = bin()
        .args(["run", scen.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_weight_construction_exits_1_with_report() {
    let dir = tmp("weight-fail");
    let body = r#"{
  "name": "cli-weight-fail",
  "geometry": { "cylinder": { "t_len": 4.0, "nt": 16, "nc": 8 } },
  "tasks": ["cylinder-weight"],
  "cylinder_weight": { "alpha": 1.0, "n": 3, "eps": 100.0, "gamma": 0.1, "beta": 5.0 }
}"#;
    let scen = write(&dir, "weight.json", body);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["run", scen.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(out_dir.join("cli-weight-fail-report.json")).unwrap();
    assert!(report.contains("\"pass\": false"));
    assert!(report.contains("beta-too-negative") || report.contains("slope-or-blend"));
}

#[test]
fn transversality_subcommand_prints_verdicts() {
    let out = bin().args(["transversality", "--c1", "2", "--genus", "0"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"transversal\""), "stdout: {text}");

    let out = bin().args(["transversality", "--c1", "-2", "--genus", "0"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"inconclusive\""), "stdout: {text}");

    let out = bin().args(["transversality", "--c1", "2"]).output().unwrap();
    assert_eq!(code(&out), 2, "genus is required with direct flags");
}

#[test]
fn corpus_subcommand_writes_report() {
    let dir = tmp("corpus");
    let out = bin()
        .args([
            "corpus", "--count", "2", "--seed", "42", "--grid", "16", "--sections", "2",
            "--out", dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.join("corpus-report.json")).unwrap();
    assert!(report.contains("\"count\": 2"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("pass:"), "stdout: {text}");
}
