//! Raster types and bit-exact frame I/O.
//!
//! Color frames are stored as binary PPM (`P6`, maxval 255) and depth
//! frames as binary PGM (`P5`, maxval 65535, big-endian 16-bit samples,
//! millimeters). A depth sample of 0 means "no reading"; every operation
//! in this module preserves that sentinel.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {found} (expected {expected})")]
    UnsupportedMaxval { expected: u32, found: u32 },
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after pixel data")]
    TrailingData,
    #[error("frame data length {len} does not match {width}x{height}")]
    LengthMismatch { width: u32, height: u32, len: usize },
    #[error("rect does not intersect the frame")]
    EmptyIntersection,
}

/// Axis-aligned pixel rectangle. `x`/`y` may be negative before clamping
/// (annotated rects can extend past the frame edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    /// Center in continuous pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// Intersection with a `width`x`height` frame, or `None` when empty.
    pub fn clamped_to(&self, width: u32, height: u32) -> Option<Rect> {
        let x0 = self.x.max(0) as i64;
        let y0 = self.y.max(0) as i64;
        let x1 = (self.x as i64 + self.w as i64).min(width as i64);
        let y1 = (self.y as i64 + self.h as i64).min(height as i64);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(Rect {
            x: x0 as i32,
            y: y0 as i32,
            w: (x1 - x0) as u32,
            h: (y1 - y0) as u32,
        })
    }
}

/// 8-bit-per-channel RGB raster, row-major triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// Row-major 8-bit luma raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// Row-major 16-bit depth raster in millimeters; 0 = invalid/no reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: u32,
    height: u32,
    data: Vec<u16>,
}

/// Read-only view shared by the sample-carrying frame kinds, so texture
/// operators can run on 8-bit gray and 16-bit depth alike.
pub trait Raster {
    type Sample: Copy + Ord;
    fn width(&self) -> u32;
    fn height(&self) -> u32;
    fn samples(&self) -> &[Self::Sample];

    #[inline]
    fn sample(&self, x: u32, y: u32) -> Self::Sample {
        self.samples()[y as usize * self.width() as usize + x as usize]
    }
}

macro_rules! frame_common {
    ($ty:ident, $sample:ty, $channels:expr) => {
        impl $ty {
            pub fn new(width: u32, height: u32, data: Vec<$sample>) -> Result<Self, ImagingError> {
                if width == 0
                    || height == 0
                    || data.len() != width as usize * height as usize * $channels
                {
                    return Err(ImagingError::LengthMismatch {
                        width,
                        height,
                        len: data.len(),
                    });
                }
                Ok(Self {
                    width,
                    height,
                    data,
                })
            }

            /// Constant-valued frame; panics on zero dimensions.
            pub fn filled(width: u32, height: u32, value: $sample) -> Self {
                assert!(width >= 1 && height >= 1);
                Self {
                    width,
                    height,
                    data: vec![value; width as usize * height as usize * $channels],
                }
            }

            pub fn width(&self) -> u32 {
                self.width
            }

            pub fn height(&self) -> u32 {
                self.height
            }

            pub fn data(&self) -> &[$sample] {
                &self.data
            }
        }
    };
}

frame_common!(ColorFrame, u8, 3);
frame_common!(GrayFrame, u8, 1);
frame_common!(DepthFrame, u16, 1);

impl Raster for GrayFrame {
    type Sample = u8;
    fn width(&self) -> u32 {
        self.width
    }
    fn height(&self) -> u32 {
        self.height
    }
    fn samples(&self) -> &[u8] {
        &self.data
    }
}

impl Raster for DepthFrame {
    type Sample = u16;
    fn width(&self) -> u32 {
        self.width
    }
    fn height(&self) -> u32 {
        self.height
    }
    fn samples(&self) -> &[u16] {
        &self.data
    }
}

impl ColorFrame {
    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    /// Integer BT.601 luma: `round((299 R + 587 G + 114 B) / 1000)`,
    /// round half up.
    pub fn to_gray(&self) -> GrayFrame {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let sum =
                    299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
                ((sum + 500) / 1000) as u8
            })
            .collect();
        GrayFrame {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

impl GrayFrame {
    /// Clamped-intersection crop. Errors when the rect misses the frame.
    pub fn crop(&self, r: Rect) -> Result<GrayFrame, ImagingError> {
        let (w, h, data) = crop_samples(self.width, self.height, &self.data, r)?;
        Ok(GrayFrame {
            width: w,
            height: h,
            data,
        })
    }

    /// Bilinear resize at half-pixel centers, result rounded half up.
    pub fn resize(&self, out_w: u32, out_h: u32) -> GrayFrame {
        assert!(out_w >= 1 && out_h >= 1);
        let mut data = Vec::with_capacity(out_w as usize * out_h as usize);
        let sx_scale = self.width as f64 / out_w as f64;
        let sy_scale = self.height as f64 / out_h as f64;
        for oy in 0..out_h {
            let sy = ((oy as f64 + 0.5) * sy_scale - 0.5)
                .clamp(0.0, (self.height - 1) as f64);
            let y0 = sy.floor() as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = sy - y0 as f64;
            for ox in 0..out_w {
                let sx = ((ox as f64 + 0.5) * sx_scale - 0.5)
                    .clamp(0.0, (self.width - 1) as f64);
                let x0 = sx.floor() as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = sx - x0 as f64;
                let p00 = self.sample(x0, y0) as f64;
                let p10 = self.sample(x1, y0) as f64;
                let p01 = self.sample(x0, y1) as f64;
                let p11 = self.sample(x1, y1) as f64;
                let top = p00 * (1.0 - fx) + p10 * fx;
                let bot = p01 * (1.0 - fx) + p11 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
        GrayFrame {
            width: out_w,
            height: out_h,
            data,
        }
    }
}

impl DepthFrame {
    pub fn crop(&self, r: Rect) -> Result<DepthFrame, ImagingError> {
        let (w, h, data) = crop_samples(self.width, self.height, &self.data, r)?;
        Ok(DepthFrame {
            width: w,
            height: h,
            data,
        })
    }

    /// Nearest-neighbor resize at half-pixel centers, ties toward the
    /// smaller index. Never blends, so the invalid-0 sentinel survives
    /// and no depth value is fabricated.
    pub fn resize(&self, out_w: u32, out_h: u32) -> DepthFrame {
        assert!(out_w >= 1 && out_h >= 1);
        let xs = nearest_indices(self.width, out_w);
        let ys = nearest_indices(self.height, out_h);
        let mut data = Vec::with_capacity(out_w as usize * out_h as usize);
        for &sy in &ys {
            let row = sy as usize * self.width as usize;
            for &sx in &xs {
                data.push(self.data[row + sx as usize]);
            }
        }
        DepthFrame {
            width: out_w,
            height: out_h,
            data,
        }
    }
}

/// Source index per output position for nearest-neighbor sampling at
/// half-pixel centers: round(((2 o + 1) in - out) / (2 out)) with ties
/// toward the smaller index, computed in exact integer arithmetic.
fn nearest_indices(in_dim: u32, out_dim: u32) -> Vec<u32> {
    let (inn, out) = (in_dim as i64, out_dim as i64);
    (0..out)
        .map(|o| {
            // round-half-down(n / d) = ceil((2n - d) / (2d))
            let n = (2 * o + 1) * inn - out;
            let d = 2 * out;
            let idx = ceil_div(2 * n - d, 2 * d);
            idx.clamp(0, inn - 1) as u32
        })
        .collect()
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    (a + b - 1).div_euclid(b)
}

fn crop_samples<T: Copy>(
    width: u32,
    height: u32,
    data: &[T],
    r: Rect,
) -> Result<(u32, u32, Vec<T>), ImagingError> {
    let clamped = r
        .clamped_to(width, height)
        .ok_or(ImagingError::EmptyIntersection)?;
    let mut out = Vec::with_capacity(clamped.w as usize * clamped.h as usize);
    for y in clamped.y as usize..clamped.y as usize + clamped.h as usize {
        let start = y * width as usize + clamped.x as usize;
        out.extend_from_slice(&data[start..start + clamped.w as usize]);
    }
    Ok((clamped.w, clamped.h, out))
}

// --- netpbm I/O ---

const COLOR_MAXVAL: u32 = 255;
const DEPTH_MAXVAL: u32 = 65535;

/// Loads a binary PPM (`P6`, maxval 255).
pub fn load_color<P: AsRef<Path>>(path: P) -> Result<ColorFrame, ImagingError> {
    let bytes = fs::read(path)?;
    let (width, height, payload) = parse_netpbm(&bytes, b"P6", COLOR_MAXVAL)?;
    let expected = width as usize * height as usize * 3;
    check_payload(payload, expected)?;
    Ok(ColorFrame {
        width,
        height,
        data: payload.to_vec(),
    })
}

/// Loads a binary PGM (`P5`, maxval 65535), samples big-endian 16-bit.
pub fn load_depth<P: AsRef<Path>>(path: P) -> Result<DepthFrame, ImagingError> {
    let bytes = fs::read(path)?;
    let (width, height, payload) = parse_netpbm(&bytes, b"P5", DEPTH_MAXVAL)?;
    let expected = width as usize * height as usize * 2;
    check_payload(payload, expected)?;
    let data = payload
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok(DepthFrame {
        width,
        height,
        data,
    })
}

pub fn save_color<P: AsRef<Path>>(frame: &ColorFrame, path: P) -> Result<(), ImagingError> {
    let mut out = Vec::with_capacity(frame.data.len() + 32);
    write!(out, "P6\n{} {}\n{}\n", frame.width, frame.height, COLOR_MAXVAL)?;
    out.extend_from_slice(&frame.data);
    fs::write(path, out)?;
    Ok(())
}

pub fn save_depth<P: AsRef<Path>>(frame: &DepthFrame, path: P) -> Result<(), ImagingError> {
    let mut out = Vec::with_capacity(frame.data.len() * 2 + 32);
    write!(out, "P5\n{} {}\n{}\n", frame.width, frame.height, DEPTH_MAXVAL)?;
    for s in &frame.data {
        out.extend_from_slice(&s.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

fn check_payload(payload: &[u8], expected: usize) -> Result<(), ImagingError> {
    if payload.len() < expected {
        return Err(ImagingError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(ImagingError::TrailingData);
    }
    Ok(())
}

/// Parses magic, width, height and maxval; `#` comments are accepted
/// anywhere whitespace is. Returns the payload after the single
/// whitespace byte that terminates the header.
fn parse_netpbm<'a>(
    bytes: &'a [u8],
    magic: &[u8],
    required_maxval: u32,
) -> Result<(u32, u32, &'a [u8]), ImagingError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(ImagingError::MalformedHeader(format!(
            "missing {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        pos = skip_whitespace_and_comments(bytes, pos)?;
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(ImagingError::MalformedHeader(
                "expected decimal field".into(),
            ));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are utf8");
        *field = text
            .parse()
            .map_err(|_| ImagingError::MalformedHeader(format!("bad field {text}")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImagingError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != required_maxval {
        return Err(ImagingError::UnsupportedMaxval {
            expected: required_maxval,
            found: maxval,
        });
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImagingError::MalformedHeader(
            "missing whitespace before pixel data".into(),
        ));
    }
    Ok((width, height, &bytes[pos + 1..]))
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> Result<usize, ImagingError> {
    let start = pos;
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    if pos == start {
        return Err(ImagingError::MalformedHeader(
            "missing whitespace separator".into(),
        ));
    }
    Ok(pos)
}
