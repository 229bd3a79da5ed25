//! Exercises the C surface from Rust, plus a real C compile/link/run
//! smoke test against the generated header and static library.

use std::collections::BTreeMap;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;

use rgbd_facekit_capi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fk_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn version_is_populated() {
    let v = unsafe { CStr::from_ptr(fk_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn lbp_code_matches_worked_example() {
    let window: [u16; 9] = [6, 5, 2, 7, 6, 1, 9, 8, 7];
    assert_eq!(unsafe { fk_lbp_code(window.as_ptr()) }, 241);
    assert_eq!(unsafe { fk_lbp_code(std::ptr::null()) }, -1);
}

#[test]
fn extraction_through_c_surface_is_engine_independent() {
    let data: Vec<u8> = (0..40 * 40).map(|i| (i * 37 % 251) as u8).collect();
    let n = fk_feature_length(2, 2);
    let mut serial = vec![0.0f64; n];
    let mut parallel = vec![0.0f64; n];
    let s1 = unsafe {
        fk_extract_gray(data.as_ptr(), 40, 40, 2, 2, 0, serial.as_mut_ptr(), n)
    };
    let s2 = unsafe {
        fk_extract_gray(data.as_ptr(), 40, 40, 2, 2, 8, parallel.as_mut_ptr(), n)
    };
    assert_eq!(s1, FkStatus::Ok);
    assert_eq!(s2, FkStatus::Ok);
    assert!(serial
        .iter()
        .zip(&parallel)
        .all(|(a, b)| a.to_bits() == b.to_bits()));

    let depth: Vec<u16> = (0..40 * 40).map(|i| (i * 997 % 60000) as u16).collect();
    let mut out = vec![0.0f64; 256];
    let s = unsafe {
        fk_extract_depth(depth.as_ptr(), 40, 40, 1, 1, 3, out.as_mut_ptr(), 256)
    };
    assert_eq!(s, FkStatus::Ok);
    let sum: f64 = out.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn wrong_output_length_is_invalid_argument() {
    let data = [0u8; 16];
    let mut out = vec![0.0f64; 10];
    let s = unsafe { fk_extract_gray(data.as_ptr(), 4, 4, 1, 1, 0, out.as_mut_ptr(), 10) };
    assert_eq!(s, FkStatus::InvalidArgument);
    assert!(last_error().contains("feature length"));
}

#[test]
fn null_arguments_reported() {
    let mut out = vec![0.0f64; 256];
    let s = unsafe { fk_extract_gray(std::ptr::null(), 4, 4, 1, 1, 0, out.as_mut_ptr(), 256) };
    assert_eq!(s, FkStatus::NullArgument);
}

fn identity_cal() -> FkCalibration {
    FkCalibration {
        depth_fx: 500.0,
        depth_fy: 500.0,
        depth_cx: 32.0,
        depth_cy: 32.0,
        color_fx: 500.0,
        color_fy: 500.0,
        color_cx: 32.0,
        color_cy: 32.0,
        t_x: 0.0,
        t_y: 0.0,
        t_z: 0.0,
    }
}

#[test]
fn face_depth_roi_identity_and_no_support() {
    let depth = vec![900u16; 64 * 64];
    let cal = identity_cal();
    let rect = FkRect {
        x: 9,
        y: 11,
        w: 20,
        h: 16,
    };
    let mut out = FkRect {
        x: 0,
        y: 0,
        w: 0,
        h: 0,
    };
    let s = unsafe {
        fk_face_depth_roi(rect, 64, 64, depth.as_ptr(), 64, 64, &cal, &mut out)
    };
    assert_eq!(s, FkStatus::Ok);
    assert_eq!((out.x, out.y, out.w, out.h), (9, 11, 20, 16));

    let invalid = vec![0u16; 64 * 64];
    let s = unsafe {
        fk_face_depth_roi(rect, 64, 64, invalid.as_ptr(), 64, 64, &cal, &mut out)
    };
    assert_eq!(s, FkStatus::NoDepthSupport);
    assert!(last_error().contains("mask"));
}

#[test]
fn model_round_trip_over_the_c_surface() {
    // train a small model with the Rust API, then consume it via C
    let blob = |cx: f64, cy: f64, salt: u64| -> Vec<Vec<f64>> {
        (0..12)
            .map(|i| {
                let t = (i as f64 + salt as f64) * 0.61;
                vec![cx + t.sin() * 0.4, cy + t.cos() * 0.4]
            })
            .collect()
    };
    let mut database = BTreeMap::new();
    database.insert("alice".to_string(), blob(3.0, 0.0, 1));
    database.insert("bob".to_string(), blob(-3.0, 0.0, 2));
    let model = rgbd_facekit::classify::train_ovr(
        &database,
        &rgbd_facekit::classify::TrainConfig::default(),
        (1, 1),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    rgbd_facekit::classify::save_model(&model, &path).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut FkModel = std::ptr::null_mut();
    let s = unsafe { fk_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(s, FkStatus::Ok);
    assert_eq!(unsafe { fk_model_feature_length(handle) }, 2);
    assert_eq!(unsafe { fk_model_label_count(handle) }, 2);

    let mut buf = [0i8; 32];
    let s = unsafe { fk_model_label(handle, 0, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(s, FkStatus::Ok);
    let label0 = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(label0, "alice");

    let mut index = -2i64;
    let mut score = f64::NAN;
    let query = [3.0f64, 0.2];
    let s = unsafe {
        fk_model_predict(
            handle,
            query.as_ptr(),
            2,
            f64::NEG_INFINITY,
            &mut index,
            &mut score,
        )
    };
    assert_eq!(s, FkStatus::Ok);
    assert_eq!(index, 0); // alice
    assert!(score.is_finite());

    // +inf threshold rejects everything
    let s = unsafe {
        fk_model_predict(handle, query.as_ptr(), 2, f64::INFINITY, &mut index, &mut score)
    };
    assert_eq!(s, FkStatus::Ok);
    assert_eq!(index, -1);

    // dimension mismatch surfaces as InvalidArgument
    let bad = [1.0f64; 5];
    let s = unsafe {
        fk_model_predict(
            handle,
            bad.as_ptr(),
            5,
            f64::NEG_INFINITY,
            &mut index,
            &mut score,
        )
    };
    assert_eq!(s, FkStatus::InvalidArgument);

    unsafe { fk_model_free(handle) };
    unsafe { fk_model_free(std::ptr::null_mut()) }; // null is fine
}

#[test]
fn model_load_errors_mapped() {
    let mut handle: *mut FkModel = std::ptr::null_mut();
    let missing = CString::new("/nonexistent/model.txt").unwrap();
    assert_eq!(
        unsafe { fk_model_load(missing.as_ptr(), &mut handle) },
        FkStatus::Io
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "not a model\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { fk_model_load(c_path.as_ptr(), &mut handle) },
        FkStatus::Data
    );
}

/// Full loop: compile the shipped C example against the generated
/// header and static library, run it, require success.
#[test]
fn c_example_compiles_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let example = manifest.join("examples/demo.c");
    assert!(include.join("rgbd_facekit.h").is_file(), "header generated");

    let target_dir = std::env::var("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| manifest.join("../../target"));
    let staticlib = target_dir.join("debug/librgbd_facekit_capi.a");
    assert!(staticlib.is_file(), "staticlib at {}", staticlib.display());

    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("demo");
    let cc = Command::new("cc")
        .arg(&example)
        .arg(format!("-I{}", include.display()))
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("cc available");
    assert!(
        cc.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&cc.stderr)
    );
    let run = Command::new(&bin).output().expect("demo runs");
    assert!(
        run.status.success(),
        "demo failed: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("identity roi holds"));
}
