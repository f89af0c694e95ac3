//! End-to-end checks of the installed binary: exit codes, JSON/CSV output
//! shapes, and the experiment bundle layout. Statistical validity of the
//! shipped configs is the acceptance gate's job; this file only drives the
//! plumbing, so the fixtures stay tiny.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
}

fn workspace_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().arg("no-such-subcommand").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));

    let out = bin().args(["seminorm", "--function", "levitan"]).output().unwrap();
    // missing required --kind
    assert_eq!(out.status.code(), Some(2));

    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("experiment"));
}

#[test]
fn validate_config_accepts_the_shipped_fixture() {
    let out = bin()
        .args(["validate-config", "--config"])
        .arg(workspace_config("ou-small.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("config ok: scenario ou-counterexample"));
}

#[test]
fn validate_config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "scenario = \"ou-counterexample\"\nnot_a_key = 1\n").unwrap();
    let out = bin().args(["validate-config", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_name_must_match_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["experiment", "anchored-sum", "--config"])
        .arg(workspace_config("ou-small.toml"))
        .arg("--out")
        .arg(dir.path().join("bundle"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("scenario"), "stderr: {}", stderr(&out));
}

#[test]
fn distance_of_two_point_masses_is_their_separation() {
    let dir = tempfile::tempdir().unwrap();
    let mu = dir.path().join("mu.csv");
    let nu = dir.path().join("nu.csv");
    std::fs::write(&mu, "c0,weight\n0.0,1.0\n").unwrap();
    std::fs::write(&nu, "c0,weight\n1.0,1.0\n").unwrap();
    let out = bin()
        .args(["distance", "--mu"])
        .arg(&mu)
        .arg("--nu")
        .arg(&nu)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let value = json["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-9, "value {value}");
    assert!(json["optimizer"].as_array().unwrap().len() == 2);

    // a malformed header is a usage-class error
    std::fs::write(&nu, "x0,weight\n1.0,1.0\n").unwrap();
    let out = bin().args(["distance", "--mu"]).arg(&mu).arg("--nu").arg(&nu).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_then_diagnose_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("ou.bin");
    let out = bin()
        .args([
            "simulate", "--kind", "ou", "--t0", "0", "--step", "0.25", "--steps", "40",
            "--paths", "60", "--seed", "9",
        ])
        .arg("--out")
        .arg(&snap)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("60 paths"));

    let curve = dir.path().join("curve.csv");
    let out = bin()
        .args(["diagnose", "--curve", "onedim", "--base", "1.0", "--shifts", "1,2"])
        .arg("--ensemble")
        .arg(&snap)
        .arg("--out")
        .arg(&curve)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("shift,d_bl,noise_floor,ratio\n"));
    assert_eq!(text.lines().count(), 3, "one row per shift:\n{text}");

    // a snapshot path that does not exist is a runtime error
    let out = bin()
        .args(["diagnose", "--base", "1.0", "--shifts", "1", "--ensemble"])
        .arg(dir.path().join("missing.bin"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seminorm_cli_reports_constant_value() {
    let out = bin()
        .args(["seminorm", "--function", "const", "--params", "0.7", "--kind", "stepanov"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["kind"], "stepanov");
    assert!((json["value"].as_f64().unwrap() - 0.7).abs() < 1e-9);
}

#[test]
fn recurrence_cli_finds_sine_periods() {
    let out = bin()
        .args([
            "recurrence", "--function", "sin", "--eps", "0.3", "--shift-max", "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // shifts near 2 pi clear eps = 0.3 on the half-unit scan grid
    assert!(json["witness_count"].as_u64().unwrap() >= 1);
}

#[test]
fn experiment_exit_1_on_a_refuted_check_and_0_on_a_passing_run() {
    let dir = tempfile::tempdir().unwrap();

    // Same scenario as the shipped fixture, shrunk to plumbing scale and
    // with an unreachable flatness bound: the run must complete, write the
    // bundle, and exit 1.
    let sabotaged = dir.path().join("sabotaged.toml");
    std::fs::write(
        &sabotaged,
        "scenario = \"ou-counterexample\"\nseed = 61\npaths = 300\n\n\
         [grid]\nt0 = 0.0\nstep = 0.25\nsteps = 120\n\n\
         [counterexample]\npath_shift_count = 1\nflatness_bound = 1e-9\n",
    )
    .unwrap();
    let refuted = dir.path().join("refuted");
    let out = bin()
        .args(["experiment", "ou-counterexample", "--config"])
        .arg(&sabotaged)
        .arg("--out")
        .arg(&refuted)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("FAIL path-flatness"));
    let verdicts: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(refuted.join("verdicts.json")).unwrap())
            .unwrap();
    assert_eq!(verdicts["all_pass"], serde_json::json!(false));

    let bundle = dir.path().join("bundle");
    let out = bin()
        .args(["experiment", "ou-counterexample", "--config"])
        .arg(workspace_config("ou-small.toml"))
        .arg("--out")
        .arg(&bundle)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    for file in ["resolved_config.toml", "verdicts.json", "tables/checks.csv"] {
        assert!(bundle.join(file).is_file(), "missing {file}");
    }
    let verdicts: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(bundle.join("verdicts.json")).unwrap())
            .unwrap();
    assert_eq!(verdicts["all_pass"], serde_json::json!(true));
}
