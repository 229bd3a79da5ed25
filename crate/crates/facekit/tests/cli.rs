//! End-to-end CLI checks: subcommand wiring, file outputs, exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_facekit");

fn facekit(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_demo_spec(path: &Path) {
    fs::write(
        path,
        "\
frames = 8
width = 160
height = 120
background_depth = 1500
subject.0.label = alice
subject.0.size = 48
subject.0.texture_seed = 101
subject.0.relief_seed = 201
subject.0.start = 40,40
subject.0.velocity = 1,0
subject.1.label = bob
subject.1.size = 48
subject.1.texture_seed = 102
subject.1.relief_seed = 202
subject.1.start = 112,60
subject.1.velocity = 0,1
",
    )
    .unwrap();
}

#[test]
fn synth_enroll_recognize_evaluate_bench_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("scene.txt");
    let data = dir.path().join("data");
    write_demo_spec(&spec);

    let out = facekit(&["synth", spec.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("color_0000.ppm").is_file());
    assert!(data.join("depth_0007.pgm").is_file());
    assert!(data.join("calib.txt").is_file());
    assert!(data.join("annotations.csv").is_file());

    let model = dir.path().join("model.txt");
    let log = dir.path().join("tracks.jsonl");
    let out = facekit(&[
        "enroll",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        log.to_str().unwrap(),
        "--workers",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model_text = fs::read_to_string(&model).unwrap();
    assert!(model_text.starts_with("rgbd-facekit-model v1\n"));
    for line in fs::read_to_string(&log).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("track_id").is_some());
        assert!(v.get("event").is_some());
    }

    let rec = dir.path().join("rec.jsonl");
    let out = facekit(&[
        "recognize",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        rec.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec_text = fs::read_to_string(&rec).unwrap();
    assert_eq!(rec_text.lines().count(), 16); // 8 frames x 2 subjects
    for line in rec_text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let label = v["label"].as_str().unwrap();
        assert!(label == "alice" || label == "bob");
    }

    let report = dir.path().join("report.csv");
    let out = facekit(&[
        "evaluate",
        data.to_str().unwrap(),
        data.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--epochs",
        "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("source,enrollment,"));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains(",true\n")); // self-test flagged

    let bench = dir.path().join("bench.csv");
    let out = facekit(&["bench", "--out", bench.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = fs::read_to_string(&bench).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 5); // sizes {100,200,400} x (serial + 4 workers)
}

#[test]
fn bundled_scene_spec_produces_an_enrollable_dataset() {
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/two_subjects.txt");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let model = dir.path().join("model.txt");
    let out = facekit(&["synth", spec.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = facekit(&[
        "enroll",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.path().join("t.jsonl").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.is_file());
}

#[test]
fn usage_errors_exit_1() {
    let out = facekit(&["bogus-subcommand"]);
    assert_eq!(out.status.code(), Some(1));
    let out = facekit(&["enroll"]); // missing required args
    assert_eq!(out.status.code(), Some(1));
    let out = facekit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let model = dir.path().join("m.txt");
    let out = facekit(&[
        "enroll",
        missing.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // grid mismatch between model and run configuration
    let spec = dir.path().join("scene.txt");
    let data = dir.path().join("data");
    write_demo_spec(&spec);
    assert!(facekit(&["synth", spec.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status
        .success());
    assert!(facekit(&[
        "enroll",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--grid",
        "2x2",
        "--out",
        dir.path().join("t.jsonl").to_str().unwrap(),
    ])
    .status
    .success());
    let out = facekit(&[
        "recognize",
        data.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--grid",
        "1x1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn synth_rejects_bad_spec_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.txt");
    fs::write(&spec, "frames = 8\nwidth = 64\n").unwrap(); // missing keys
    let out = facekit(&[
        "synth",
        spec.to_str().unwrap(),
        "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
