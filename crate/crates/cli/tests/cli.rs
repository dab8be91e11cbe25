use std::path::Path;
use std::process::{Command, Output};

fn branched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branched")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn kernel_check_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = branched(&["kernel-check", "--out", &out_arg(dir.path()), "--tol", "kappa3=1e-13"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS kappa3")));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let text = manifest.to_string();
    assert!(text.contains("\"kappa3\":1e-13"), "{text}");
    assert!(dir.path().join("kernel_checks.csv").exists());
}

#[test]
fn malformed_config_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let spec = branched_core::domain::ConfigSpec::canonical_torus(1.0 / 32.0).to_json();
    let bad = spec.replacen("\"spacing\": 0.03125", "\"spacing\": \"fine\"", 1);
    assert_ne!(bad, spec, "fixture must change the spacing field");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let out = branched(&["solve", "--config", path.to_str().unwrap(), "--out", &out_arg(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line") && err.contains("column"), "{err}");
}

#[test]
fn unknown_tolerance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = branched(&["kernel-check", "--out", &out_arg(dir.path()), "--tol", "no_such_check=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown tolerance"));
}

#[test]
fn unknown_command_exits_2() {
    assert_eq!(branched(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn single_thread_runs_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = branched(&["solve", "--single-thread", "--resolution", "1/48,1/64", "--out", &out_arg(dir.path())]);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert!(x == y, "{} differs between runs", name.to_string_lossy());
            compared += 1;
        }
    }
    assert!(compared >= 3);
}
