//! End-to-end checks of the command line interface and its exit codes.

use std::process::Command;

fn lsmcf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsmcf"))
}

fn small_config(dir: &std::path::Path, n: usize) -> serde_json::Value {
    serde_json::json!({
        "name": "cli_smoke",
        "grid": {"dimension": 2, "half_width": 1.0, "points_per_axis": n},
        "solver": {
            "epsilon": {"h_multiple": {"factor": 1.0}},
            "t_end": 0.01,
            "snapshot_interval": 0.002
        },
        "initial_data": {
            "preset": {"radial_bump": {
                "center": [0.0, 0.0], "inner_radius": 0.4, "plateau_cap": 0.2
            }},
            "far_field_value": 0.0
        },
        "verifier": {"run_residuals": false},
        "output": {
            "directory": dir,
            "persist_snapshots": true,
            "emit_svg": true
        }
    })
}

#[test]
fn run_verify_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("artifacts");
    let config_path = tmp.path().join("config.json");
    std::fs::write(&config_path, small_config(&out_dir, 129).to_string()).unwrap();

    let run = lsmcf().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert!(
        run.status.success(),
        "run failed: {}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(summary["passed"], serde_json::json!(true));
    for f in ["diagnostics.csv", "residuals.csv", "summary.json", "energy.svg"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }

    let verify = lsmcf()
        .args(["verify", "--snapshots"])
        .arg(out_dir.join("snapshots"))
        .output()
        .unwrap();
    assert!(
        verify.status.success(),
        "verify failed: {}",
        String::from_utf8_lossy(&verify.stderr)
    );
    let vs: serde_json::Value = serde_json::from_slice(&verify.stdout).unwrap();
    assert_eq!(vs["passed"], serde_json::json!(true));
}

#[test]
fn malformed_config_is_rejected_without_side_effects() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("artifacts");
    let config_path = tmp.path().join("config.json");
    // n = 8 violates the minimum grid size
    std::fs::write(&config_path, small_config(&out_dir, 8).to_string()).unwrap();

    let run = lsmcf().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(run.status.code(), Some(3), "expected validation exit code");
    assert!(!out_dir.exists(), "no files may be written on validation failure");
    let record: serde_json::Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(record["kind"], serde_json::json!("validation"));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("config.json");
    let mut cfg = small_config(tmp.path(), 65);
    cfg["unexpected_key"] = serde_json::json!(42);
    std::fs::write(&config_path, cfg.to_string()).unwrap();
    let run = lsmcf().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn preset_listing_and_unknown_preset() {
    let list = lsmcf().arg("preset").output().unwrap();
    assert!(list.status.success());
    let names = String::from_utf8(list.stdout).unwrap();
    assert!(names.lines().any(|l| l == "shrinking_circle"));

    let bad = lsmcf().args(["preset", "definitely_not_real"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn thread_cap_env_var_is_accepted() {
    let list = lsmcf().env("LSMCF_THREADS", "2").arg("preset").output().unwrap();
    assert!(list.status.success());
}
