//! Exit-code contract of the command-line interface.
//!
//! Success is 0. Unreadable inputs and malformed file formats (missing
//! files, broken JSON syntax, unparseable meshes) exit 1. Well-formed input
//! that violates domain rules (schema violations, missing required
//! settings, contradictory options) exits 2.

use std::fs;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_histo3d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    fs::write(path, contents).expect("fixture written");
}

const VALID_PROTOCOL: &str = r#"{
  "case_id": "cli-err-01",
  "apex": {
    "offset_mm": 6.0,
    "split_frontal": false,
    "sections": {
      "L": { "count": 2, "ids": ["AL1", "AL2"] },
      "R": { "count": 2, "ids": ["AR1", "AR2"] }
    }
  },
  "base": {
    "offset_mm": 7.0,
    "split_frontal": false,
    "sections": {
      "L": { "count": 2, "ids": ["BL1", "BL2"] },
      "R": { "count": 2, "ids": ["BR1", "BR2"] }
    }
  },
  "central_count": 1,
  "central": [
    { "index": 1, "split_frontal": false, "ids": ["2L", "2R"] }
  ]
}"#;

#[test]
fn valid_protocol_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("protocol.json");
    write(&p, VALID_PROTOCOL);
    let out = run(&["protocol", "validate", p.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("protocol OK"), "stdout: {stdout}");
}

#[test]
fn missing_input_file_exits_one() {
    let out = run(&["protocol", "validate", "/nonexistent/protocol.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn broken_json_syntax_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("protocol.json");
    write(&p, "{ \"case_id\": \"x\", ");
    let out = run(&["protocol", "validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("protocol.json");
    // Well-formed JSON whose slice list contradicts its declared count.
    write(
        &p,
        &VALID_PROTOCOL.replace("\"central_count\": 1", "\"central_count\": 2"),
    );
    let out = run(&["protocol", "validate", p.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_required_setting_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // slice with no protocol configured anywhere
    let out = run(&[
        "slice",
        "--generic-model",
        "40,30,35",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn contradictory_scale_flags_exit_two() {
    // --scale (absolute mm per unit) and --mpp (microns per pixel) are
    // mutually exclusive ways to state the same thing.
    let out = run(&["register", "--scale", "0.001", "--mpp", "0.25"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.json");
    write(&cfgp, r#"{"protocl": "typo.json"}"#);
    let out = run(&["slice", "--config", cfgp.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unreadable_mesh_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("protocol.json");
    write(&p, VALID_PROTOCOL);
    let mesh = dir.path().join("model.obj");
    write(&mesh, "v 0 0\nnot a face\nf 1 2"); // truncated vertex, bad face
    let out = run(&[
        "slice",
        "--protocol",
        p.to_str().unwrap(),
        "--mesh",
        mesh.to_str().unwrap(),
        "--output",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
