use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holofit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn synth(frames: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--seed", "4", "--frames", frames, "-o", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn synth_writes_every_artifact() {
    let dir = synth("4");
    for name in [
        "motion.json",
        "init.json",
        "camera.json",
        "layout.json",
        "keypoints_clean.jsonl",
        "keypoints_noisy.jsonl",
        "joints.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let lines = fs::read_to_string(dir.path().join("keypoints_clean.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
}

#[test]
fn missing_input_file_exits_with_2() {
    let dir = synth("3");
    let out = run(&[
        "fit",
        "--keypoints",
        s(&dir.path().join("keypoints_clean.jsonl")),
        "--camera",
        s(&dir.path().join("camera.json")),
        "--model",
        s(&dir.path().join("no_such_model.json")),
        "-o",
        s(&dir.path().join("fit.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_model"));
}

#[test]
fn bad_usage_exits_with_2() {
    assert_eq!(run(&["fit"]).status.code(), Some(2));
    assert_eq!(
        run(&["--threads", "0", "metrics", "mm-dist", "--features", "x.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn zero_step_fit_writes_the_initialization() {
    let dir = synth("3");
    let out_path = dir.path().join("fit.json");
    let out = run(&[
        "--json",
        "fit",
        "--keypoints",
        s(&dir.path().join("keypoints_clean.jsonl")),
        "--camera",
        s(&dir.path().join("camera.json")),
        "--init",
        s(&dir.path().join("init.json")),
        "--steps",
        "0",
        "-o",
        s(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["iterations"], 0);
    let fit: Value = serde_json::from_slice(&fs::read(&out_path).unwrap()).unwrap();
    let init: Value = serde_json::from_slice(&fs::read(dir.path().join("init.json")).unwrap()).unwrap();
    assert_eq!(fit, init);
}

#[test]
fn config_file_supplies_paths_relative_to_itself() {
    let dir = synth("3");
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"keypoints": ["keypoints_clean.jsonl"], "camera": "camera.json", "init": "init.json",
            "output": "fit.json", "fit": {"total_steps": 10}}"#,
    )
    .unwrap();
    let out = run(&["--json", "--config", s(&cfg), "fit", "--steps", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("fit.json").exists());
    assert_eq!(stdout_json(&out)["iterations"], 10);

    fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(run(&["--config", s(&cfg), "fit"]).status.code(), Some(2));
}

#[test]
fn validate_passes_ground_truth_and_honors_the_threshold() {
    let dir = synth("5");
    let motion = dir.path().join("motion.json");
    let out = run(&["--json", "validate", "--motion", s(&motion)]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["violations"], 0);
    assert_eq!(r["passed"], true);

    let limits = dir.path().join("limits.json");
    let model = holofit::body_model::default_skeleton();
    let mut tight = holofit::objective::default_limits(&model);
    for b in &mut tight.bones {
        b.min *= 2.0;
        b.max *= 2.0;
    }
    tight.save(&limits).unwrap();
    let out = run(&["--json", "validate", "--motion", s(&motion), "--limits", s(&limits)]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert!(r["violation_rate"].as_f64().unwrap() > 0.0);
    let out = run(&[
        "validate",
        "--motion",
        s(&motion),
        "--limits",
        s(&limits),
        "--max-violations",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn fuse_matches_the_confident_source_and_rejects_mismatches() {
    let dir = synth("3");
    let clean = dir.path().join("keypoints_clean.jsonl");
    let out_path = dir.path().join("fused.jsonl");
    let out = run(&[
        "fuse",
        "--input",
        s(&clean),
        "--input",
        s(&clean),
        "--no-fill",
        "--threshold",
        "0",
        "-o",
        s(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&out_path).unwrap(), fs::read(&clean).unwrap());

    let short = dir.path().join("short.jsonl");
    let text = fs::read_to_string(&clean).unwrap();
    fs::write(&short, text.lines().next().unwrap()).unwrap();
    let out = run(&["fuse", "--input", s(&clean), "--input", s(&short), "-o", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_of_identical_inputs_are_zero() {
    let dir = synth("4");
    let joints = dir.path().join("joints.json");
    let out = run(&[
        "--json",
        "metrics",
        "dtw-mje",
        "--reference",
        s(&joints),
        "--hypothesis",
        s(&joints),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["dtw_mje"], 0.0);

    let feats = dir.path().join("features.json");
    let items: Vec<Value> = (0..6)
        .map(|i| serde_json::json!({"id": format!("m{i}"), "motion": [i as f64, (i * i) as f64 * 0.1, 1.0 - i as f64]}))
        .collect();
    fs::write(&feats, serde_json::json!({"d": 3, "items": items}).to_string()).unwrap();
    let out = run(&["--json", "metrics", "fid", "--real", s(&feats), "--gen", s(&feats)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_json(&out)["fid"].as_f64().unwrap().abs() < 1e-8);

    let out = run(&["metrics", "r-precision", "--features", s(&feats)]);
    assert_eq!(out.status.code(), Some(2), "six items cannot fill a pool of 32");
}

#[test]
fn human_output_is_key_value_lines() {
    let dir = synth("2");
    let out = run(&["validate", "--motion", s(&dir.path().join("motion.json"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "violations=0"), "{text}");
}
