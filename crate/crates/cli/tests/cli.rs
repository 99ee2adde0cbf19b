use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fieldfuse");

fn fieldfuse(args: &[&str]) -> Command {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("FIELDFUSE_ADAPTER").env_remove("FIELDFUSE_MOCK_CONFIG");
    c
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// One date, one size, one checkpoint, one variant over a 240 m scene.
fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{"output_dir": "out", "scene": {{"synthetic": {{"extent_m": [240, 240], "n_dates": 1}}}},
            "tile_sizes": [256], "checkpoints": ["vit_b"], "variants": ["original"]{extra}}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_all_scores_the_oracle_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let stdout = ok(fieldfuse(&["run-all", "--config", cfg.to_str().unwrap()]).output().unwrap());
    assert!(stdout.contains("Lcombined/*/*/*/*"), "{stdout}");
    let out = dir.path().join("out");
    for rel in ["run.log", "run_config.json", "scene/gt.geojson", "T1/original/256/vit_b/layer.geojson", "report/metrics.csv"] {
        assert!(out.join(rel).is_file(), "{rel}");
    }
    let csv = fs::read_to_string(out.join("report/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn stages_one_at_a_time_match_run_all() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let staged = dir.path().join("staged");
    let staged_s = staged.to_str().unwrap();
    for stage in ["synth", "preprocess", "tile", "segment", "vectorize", "merge-tiles", "fuse", "evaluate", "report"] {
        ok(fieldfuse(&[stage, "--config", cfg, "--output-dir", staged_s]).output().unwrap());
    }
    ok(fieldfuse(&["run-all", "--config", cfg]).output().unwrap());
    for rel in ["report/metrics.csv", "evaluation/evaluation.json", "fused/combined.geojson"] {
        assert_eq!(
            fs::read(staged.join(rel)).unwrap(),
            fs::read(dir.path().join("out").join(rel)).unwrap(),
            "{rel}"
        );
    }
}

#[test]
fn external_mock_adapter_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    ok(fieldfuse(&["run-all", "--config", cfg]).output().unwrap());

    let ext = dir.path().join("ext");
    ok(fieldfuse(&["synth", "--config", cfg, "--output-dir", ext.to_str().unwrap()]).output().unwrap());
    let mock_cfg = dir.path().join("mock.json");
    let gt = ext.join("scene/gt.geojson");
    fs::write(&mock_cfg, serde_json::json!({"gt": gt, "degradation": {"seed": 42}}).to_string()).unwrap();
    let adapter = format!("{BIN} mock-adapter");
    let stdout = ok(fieldfuse(&["run-all", "--config", cfg, "--output-dir", ext.to_str().unwrap()])
        .env("FIELDFUSE_ADAPTER", &adapter)
        .env("FIELDFUSE_MOCK_CONFIG", &mock_cfg)
        .output()
        .unwrap());
    assert!(stdout.contains("detection"));
    let resolved = fs::read_to_string(ext.join("run_config.json")).unwrap();
    assert!(resolved.contains("mock-adapter"), "{resolved}");
    for rel in ["evaluation/evaluation.json", "T1/original/256/vit_b/layer.geojson", "T1/original/256/vit_b/job/done.json"] {
        assert_eq!(fs::read(ext.join(rel)).unwrap(), fs::read(dir.path().join("out").join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "surprise": true"#);
    let out = fieldfuse(&["run-all", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));

    let cfg = write_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["run-all", "--config", cfg, "--tile-sizes", "300"],
        vec!["run-all", "--config", cfg, "--checkpoints", "vit_x"],
        vec!["run-all", "--config", "/nonexistent/run.json"],
        vec!["run-all"],
        vec!["evaluate", "--config", cfg],
        vec!["no-such-command"],
        vec!["mock-adapter", "--manifest", "m.json", "--out", ".", "--checkpoint", "vit_b"],
    ] {
        let out = fieldfuse(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failing_adapter_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = fieldfuse(&["run-all", "--config", cfg.to_str().unwrap()])
        .env("FIELDFUSE_ADAPTER", "sh -c 'echo weights missing >&2; exit 3' --")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("weights missing"), "{stderr}");
    let log = fs::read_to_string(dir.path().join("out/run.log")).unwrap();
    assert!(log.contains("weights missing"), "{log}");
}

#[test]
fn help_and_version_exit_0() {
    for flag in ["--help", "--version"] {
        assert!(fieldfuse(&[flag]).output().unwrap().status.success());
    }
    let help = ok(fieldfuse(&["--help"]).output().unwrap());
    assert!(!help.contains("mock-adapter"));
    for sub in ["synth", "preprocess", "tile", "segment", "vectorize", "merge-tiles", "fuse", "evaluate", "report", "run-all"] {
        assert!(help.contains(sub), "{sub}");
    }
}
