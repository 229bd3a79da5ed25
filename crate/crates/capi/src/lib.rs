//! C ABI over the RGB-D face recognition toolkit.
//!
//! Conventions: every fallible call returns an [`FkStatus`]; outputs go
//! through pointers that must be non-null and properly sized. On any
//! non-`Ok` status, `fk_last_error` returns a thread-local message that
//! stays valid until the next failing call on the same thread. Opaque
//! handles (`FkModel`) are created and released by this library only.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use rgbd_facekit::classify::{self, OvrModel, Prediction};
use rgbd_facekit::features::{self, Engine, LbpParams};
use rgbd_facekit::imaging::{DepthFrame, GrayFrame, Rect};
use rgbd_facekit::registration::{self, CalibrationPair, Intrinsics};

/// Call outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// File could not be read or written.
    Io = 3,
    /// File or buffer contents were malformed.
    Data = 4,
    /// The reprojected face mask was empty.
    NoDepthSupport = 5,
}

/// Trained one-vs-rest model handle.
pub struct FkModel {
    inner: OvrModel,
}

/// Pixel rectangle.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FkRect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

/// Pinhole calibration for the depth/color camera pair; translation in
/// millimeters, rotation assumed identity.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FkCalibration {
    pub depth_fx: f64,
    pub depth_fy: f64,
    pub depth_cx: f64,
    pub depth_cy: f64,
    pub color_fx: f64,
    pub color_fy: f64,
    pub color_cx: f64,
    pub color_cy: f64,
    pub t_x: f64,
    pub t_y: f64,
    pub t_z: f64,
}

impl From<&FkCalibration> for CalibrationPair {
    fn from(c: &FkCalibration) -> Self {
        CalibrationPair {
            depth: Intrinsics {
                fx: c.depth_fx,
                fy: c.depth_fy,
                cx: c.depth_cx,
                cy: c.depth_cy,
            },
            color: Intrinsics {
                fx: c.color_fx,
                fy: c.color_fy,
                cx: c.color_cx,
                cy: c.color_cy,
            },
            translation: (c.t_x, c.t_y, c.t_z),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: FkStatus, message: impl Into<Vec<u8>>) -> FkStatus {
    let message = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
    status
}

/// Message for the most recent failure on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fk_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn fk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Feature vector length for a histogram grid (256 bins per cell).
#[no_mangle]
pub extern "C" fn fk_feature_length(grid_x: u32, grid_y: u32) -> usize {
    grid_x as usize * grid_y as usize * 256
}

/// LBP code of a 3x3 window given as 9 row-major samples, or -1 when
/// `window` is null.
///
/// # Safety
/// `window` must point to at least 9 readable `uint16_t` values.
#[no_mangle]
pub unsafe extern "C" fn fk_lbp_code(window: *const u16) -> i32 {
    if window.is_null() {
        return -1;
    }
    let s = std::slice::from_raw_parts(window, 9);
    let w = [
        [s[0], s[1], s[2]],
        [s[3], s[4], s[5]],
        [s[6], s[7], s[8]],
    ];
    features::lbp_code(&w) as i32
}

fn engine_for(workers: u32) -> Engine {
    if workers == 0 {
        Engine::Serial
    } else {
        Engine::Parallel {
            workers: workers as usize,
        }
    }
}

unsafe fn extract_common<R>(
    roi: Result<R, rgbd_facekit::imaging::ImagingError>,
    grid_x: u32,
    grid_y: u32,
    workers: u32,
    out: *mut f64,
    out_len: usize,
) -> FkStatus
where
    R: rgbd_facekit::imaging::Raster + Sync,
    R::Sample: Send + Sync,
{
    let roi = match roi {
        Ok(r) => r,
        Err(e) => return fail(FkStatus::InvalidArgument, e.to_string()),
    };
    let params = match LbpParams::with_grid(grid_x, grid_y) {
        Ok(p) => p,
        Err(e) => return fail(FkStatus::InvalidArgument, e.to_string()),
    };
    if out_len != params.feature_length() {
        return fail(
            FkStatus::InvalidArgument,
            format!(
                "output length {} does not match feature length {}",
                out_len,
                params.feature_length()
            ),
        );
    }
    match features::extract(&roi, &params, engine_for(workers)) {
        Ok(v) => {
            std::ptr::copy_nonoverlapping(v.values().as_ptr(), out, out_len);
            FkStatus::Ok
        }
        Err(e) => fail(FkStatus::InvalidArgument, e.to_string()),
    }
}

/// Extracts the block-LBP feature vector of an 8-bit gray ROI.
/// `workers` = 0 selects the serial engine; any positive count produces
/// bit-identical output. `out` must hold
/// `fk_feature_length(grid_x, grid_y)` doubles.
///
/// # Safety
/// `data` must point to `width * height` readable bytes and `out` to
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fk_extract_gray(
    data: *const u8,
    width: u32,
    height: u32,
    grid_x: u32,
    grid_y: u32,
    workers: u32,
    out: *mut f64,
    out_len: usize,
) -> FkStatus {
    if data.is_null() || out.is_null() {
        return fail(FkStatus::NullArgument, "data and out must be non-null");
    }
    let samples = std::slice::from_raw_parts(data, width as usize * height as usize);
    extract_common(
        GrayFrame::new(width, height, samples.to_vec()),
        grid_x,
        grid_y,
        workers,
        out,
        out_len,
    )
}

/// Depth variant of `fk_extract_gray` over 16-bit millimeter samples.
///
/// # Safety
/// `data` must point to `width * height` readable `uint16_t` values and
/// `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fk_extract_depth(
    data: *const u16,
    width: u32,
    height: u32,
    grid_x: u32,
    grid_y: u32,
    workers: u32,
    out: *mut f64,
    out_len: usize,
) -> FkStatus {
    if data.is_null() || out.is_null() {
        return fail(FkStatus::NullArgument, "data and out must be non-null");
    }
    let samples = std::slice::from_raw_parts(data, width as usize * height as usize);
    extract_common(
        DepthFrame::new(width, height, samples.to_vec()),
        grid_x,
        grid_y,
        workers,
        out,
        out_len,
    )
}

/// Maps a color-space face rect to its depth-space bounding rect via
/// mask reprojection under the pinhole calibration.
///
/// # Safety
/// `depth` must point to `depth_width * depth_height` readable
/// `uint16_t` values; `cal` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fk_face_depth_roi(
    rect: FkRect,
    color_width: u32,
    color_height: u32,
    depth: *const u16,
    depth_width: u32,
    depth_height: u32,
    cal: *const FkCalibration,
    out: *mut FkRect,
) -> FkStatus {
    if depth.is_null() || cal.is_null() || out.is_null() {
        return fail(FkStatus::NullArgument, "depth, cal and out must be non-null");
    }
    let samples =
        std::slice::from_raw_parts(depth, depth_width as usize * depth_height as usize);
    let frame = match DepthFrame::new(depth_width, depth_height, samples.to_vec()) {
        Ok(f) => f,
        Err(e) => return fail(FkStatus::InvalidArgument, e.to_string()),
    };
    let pair = CalibrationPair::from(&*cal);
    match registration::face_depth_roi(
        Rect::new(rect.x, rect.y, rect.w, rect.h),
        (color_width, color_height),
        &frame,
        &pair,
    ) {
        Ok(r) => {
            *out = FkRect {
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
            };
            FkStatus::Ok
        }
        Err(registration::RegistrationError::NoDepthSupport) => fail(
            FkStatus::NoDepthSupport,
            "reprojected face mask is empty",
        ),
        Err(e) => fail(FkStatus::InvalidArgument, e.to_string()),
    }
}

/// Loads a model file into a fresh handle. The handle must be released
/// with `fk_model_free`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_model_load(path: *const c_char, out: *mut *mut FkModel) -> FkStatus {
    if path.is_null() || out.is_null() {
        return fail(FkStatus::NullArgument, "path and out must be non-null");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => PathBuf::from(s),
        Err(_) => return fail(FkStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    match classify::load_model(&path) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(FkModel { inner: model }));
            FkStatus::Ok
        }
        Err(classify::ClassifyError::Io(e)) => fail(FkStatus::Io, e.to_string()),
        Err(e) => fail(FkStatus::Data, e.to_string()),
    }
}

/// Releases a model handle. Null is accepted and ignored.
///
/// # Safety
/// `model` must be null or a pointer returned by `fk_model_load` that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn fk_model_free(model: *mut FkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature length the model was trained with, or 0 for null.
///
/// # Safety
/// `model` must be null or a live handle from `fk_model_load`.
#[no_mangle]
pub unsafe extern "C" fn fk_model_feature_length(model: *const FkModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.feature_length())
}

/// Number of identity labels in the model, or 0 for null.
///
/// # Safety
/// `model` must be null or a live handle from `fk_model_load`.
#[no_mangle]
pub unsafe extern "C" fn fk_model_label_count(model: *const FkModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.machines().len())
}

/// Copies the label at `index` into `buf` as a nul-terminated string.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fk_model_label(
    model: *const FkModel,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> FkStatus {
    let Some(model) = model.as_ref() else {
        return fail(FkStatus::NullArgument, "model must be non-null");
    };
    if buf.is_null() {
        return fail(FkStatus::NullArgument, "buf must be non-null");
    }
    let Some((label, _)) = model.inner.machines().get(index) else {
        return fail(
            FkStatus::InvalidArgument,
            format!("label index {index} out of range"),
        );
    };
    let bytes = label.as_bytes();
    if bytes.len() + 1 > buf_len {
        return fail(
            FkStatus::InvalidArgument,
            format!("buffer of {} bytes too small for label", buf_len),
        );
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
    *buf.add(bytes.len()) = 0;
    FkStatus::Ok
}

/// Predicts the best-scoring identity for a feature vector.
/// `out_label_index` receives the index usable with `fk_model_label`,
/// or -1 when the best score falls below `reject_threshold` (pass
/// -INFINITY to disable rejection). `out_score` receives the best score
/// either way.
///
/// # Safety
/// `features` must point to `len` readable doubles; the out pointers
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn fk_model_predict(
    model: *const FkModel,
    features: *const f64,
    len: usize,
    reject_threshold: f64,
    out_label_index: *mut i64,
    out_score: *mut f64,
) -> FkStatus {
    let Some(model) = model.as_ref() else {
        return fail(FkStatus::NullArgument, "model must be non-null");
    };
    if features.is_null() || out_label_index.is_null() || out_score.is_null() {
        return fail(FkStatus::NullArgument, "features and outputs must be non-null");
    }
    let x = std::slice::from_raw_parts(features, len);
    match model.inner.predict(x, reject_threshold) {
        Ok(Prediction::Known { label, score }) => {
            let index = model
                .inner
                .machines()
                .iter()
                .position(|(l, _)| *l == label)
                .expect("predicted label exists") as i64;
            *out_label_index = index;
            *out_score = score;
            FkStatus::Ok
        }
        Ok(Prediction::Unknown { best_score }) => {
            *out_label_index = -1;
            *out_score = best_score;
            FkStatus::Ok
        }
        Err(e) => fail(FkStatus::InvalidArgument, e.to_string()),
    }
}
