//! Deterministic synthetic RGB-D sequence generator.
//!
//! Subjects are square patches with a procedural gray texture and a
//! rigid depth relief, both derived from integer-hash value noise so a
//! scene regenerates byte-identically on any platform. The optional
//! illumination gradient is a linear ramp across the frame that
//! modulates only the color texture: as a subject moves through it the
//! local gray-level orderings change from frame to frame, while the
//! depth relief translates untouched. Depth features are therefore
//! illumination-invariant by construction and gray features are not.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::imaging::{self, ColorFrame, DepthFrame, Rect};
use crate::registration::{self, CalibrationPair};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("subject {subject} leaves the frame at frame {frame}")]
    PathLeavesFrame { subject: String, frame: usize },
    #[error("scene spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Imaging(#[from] imaging::ImagingError),
    #[error(transparent)]
    Registration(#[from] registration::RegistrationError),
}

/// One synthetic identity.
#[derive(Debug, Clone)]
pub struct SubjectSpec {
    pub label: String,
    pub texture_seed: u64,
    pub relief_seed: u64,
    pub size: u32,
}

/// Optional seeded uniform depth noise.
#[derive(Debug, Clone, Copy)]
pub struct DepthJitter {
    pub amplitude_mm: u16,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub frames: usize,
    pub color_dims: (u32, u32),
    pub depth_dims: (u32, u32),
    pub subjects: Vec<SubjectSpec>,
    /// Per subject, per frame patch centers.
    pub paths: Vec<Vec<(i32, i32)>>,
    pub background_depth_mm: u16,
    /// Linear illumination ramp slope; `None` disables it.
    pub illumination_slope: Option<f64>,
    pub calibration: CalibrationPair,
    pub depth_jitter: Option<DepthJitter>,
}

impl SceneSpec {
    /// Patch rect of a subject at a given frame.
    pub fn subject_rect(&self, subject: usize, frame: usize) -> Rect {
        let size = self.subjects[subject].size;
        let (cx, cy) = self.paths[subject][frame];
        Rect::new(cx - size as i32 / 2, cy - size as i32 / 2, size, size)
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.frames == 0 {
            return Err(SynthError::InvalidScene("frame count must be >= 1".into()));
        }
        if self.frames > 10_000 {
            return Err(SynthError::InvalidScene(
                "frame index is zero-padded to 4 digits; at most 10000 frames".into(),
            ));
        }
        if self.subjects.is_empty() {
            return Err(SynthError::InvalidScene("no subjects".into()));
        }
        if self.paths.len() != self.subjects.len() {
            return Err(SynthError::InvalidScene(
                "one path required per subject".into(),
            ));
        }
        if self.background_depth_mm == 0 {
            return Err(SynthError::InvalidScene(
                "background depth must be a valid (> 0) reading".into(),
            ));
        }
        for (i, subject) in self.subjects.iter().enumerate() {
            if subject.size < 16 {
                return Err(SynthError::InvalidScene(format!(
                    "subject {} smaller than 16 px",
                    subject.label
                )));
            }
            for (j, other) in self.subjects.iter().enumerate() {
                if i != j
                    && (subject.texture_seed == other.texture_seed
                        || subject.relief_seed == other.relief_seed)
                {
                    return Err(SynthError::InvalidScene(format!(
                        "subjects {} and {} share a seed",
                        subject.label, other.label
                    )));
                }
            }
            if self.paths[i].len() != self.frames {
                return Err(SynthError::InvalidScene(format!(
                    "subject {} has {} path entries for {} frames",
                    subject.label,
                    self.paths[i].len(),
                    self.frames
                )));
            }
            let (w, h) = (
                self.color_dims.0.min(self.depth_dims.0),
                self.color_dims.1.min(self.depth_dims.1),
            );
            for frame in 0..self.frames {
                let r = self.subject_rect(i, frame);
                // keep 1 px clear of the top/left edges: the registration
                // bounds check is strict there
                if r.x < 1
                    || r.y < 1
                    || r.x as i64 + r.w as i64 > w as i64
                    || r.y as i64 + r.h as i64 > h as i64
                {
                    return Err(SynthError::PathLeavesFrame {
                        subject: subject.label.clone(),
                        frame,
                    });
                }
            }
        }
        Ok(())
    }
}

// --- integer-hash noise ---

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn hash2(seed: u64, x: u32, y: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ x as u64) ^ y as u64)
}

/// Per-seed noise shape: anisotropic correlation lengths and a
/// posterization level count. Two seeds then differ in texture
/// statistics — plateau sizes and edge density — rather than only in
/// sample values, which keeps their LBP histograms far apart instead of
/// differing by sampling noise alone.
fn noise_shape(seed: u64) -> (u32, u32, u32) {
    let h = splitmix64(seed ^ 0x6e01_5e5a);
    let cell_w = 5 + (h % 6) as u32;
    let cell_h = 5 + ((h >> 8) % 6) as u32;
    let levels = 2 + ((h >> 16) % 6) as u32;
    (cell_w, cell_h, levels)
}

/// Posterized value noise in [0, 255], integer arithmetic only. The
/// flat plateaus it produces are deliberate: a spatially varying
/// illumination ramp turns a plateau into a monotone gradient, visibly
/// rewriting the local orderings a gray-side LBP sees.
fn value_noise(seed: u64, x: u32, y: u32) -> u32 {
    let (cw, ch, levels) = noise_shape(seed);
    let (cx, fx) = (x / cw, x % cw);
    let (cy, fy) = (y / ch, y % ch);
    let lattice = |gx: u32, gy: u32| (hash2(seed, gx, gy) & 0xff) as u32;
    let (h00, h10) = (lattice(cx, cy), lattice(cx + 1, cy));
    let (h01, h11) = (lattice(cx, cy + 1), lattice(cx + 1, cy + 1));
    let v = h00 * (cw - fx) * (ch - fy)
        + h10 * fx * (ch - fy)
        + h01 * (cw - fx) * fy
        + h11 * fx * fy;
    let smooth = (v + cw * ch / 2) / (cw * ch);
    let quantum = 255 / (levels - 1);
    (((smooth + quantum / 2) / quantum) * quantum).min(255)
}

fn texture_value(seed: u64, x: u32, y: u32) -> u8 {
    value_noise(seed, x, y) as u8
}

fn relief_mm(seed: u64, x: u32, y: u32) -> i32 {
    value_noise(seed, x, y) as i32 / 2 - 64
}

const BACKGROUND_GRAY: u8 = 96;
const SUBJECT_RELIEF_OFFSET_MM: u16 = 500;

fn subject_plane_mm(background: u16) -> i32 {
    (background.saturating_sub(SUBJECT_RELIEF_OFFSET_MM)).max(200) as i32
}

/// Renders the color frame for one scene frame.
pub fn render_color(scene: &SceneSpec, frame: usize) -> ColorFrame {
    let (w, h) = scene.color_dims;
    let mut data = vec![BACKGROUND_GRAY; w as usize * h as usize * 3];
    for (si, subject) in scene.subjects.iter().enumerate() {
        let rect = scene.subject_rect(si, frame);
        for ly in 0..subject.size {
            let gy = (rect.y as u32) + ly;
            for lx in 0..subject.size {
                let gx = (rect.x as u32) + lx;
                let mut g = texture_value(subject.texture_seed, lx, ly) as f64;
                if let Some(slope) = scene.illumination_slope {
                    let ramp = 1.0 + slope * (gx as f64 / (w - 1).max(1) as f64 - 0.5);
                    g = (g * ramp + 0.5).floor();
                }
                let g = g.clamp(0.0, 255.0) as u8;
                let idx = (gy as usize * w as usize + gx as usize) * 3;
                data[idx] = g;
                data[idx + 1] = g;
                data[idx + 2] = g;
            }
        }
    }
    ColorFrame::new(w, h, data).expect("valid dims")
}

/// Renders the depth frame for one scene frame.
pub fn render_depth(scene: &SceneSpec, frame: usize) -> DepthFrame {
    let (w, h) = scene.depth_dims;
    let mut data = vec![scene.background_depth_mm; w as usize * h as usize];
    let plane = subject_plane_mm(scene.background_depth_mm);
    for (si, subject) in scene.subjects.iter().enumerate() {
        let rect = scene.subject_rect(si, frame);
        for ly in 0..subject.size {
            let gy = (rect.y as u32) + ly;
            for lx in 0..subject.size {
                let gx = (rect.x as u32) + lx;
                let depth = (plane + relief_mm(subject.relief_seed, lx, ly)).max(1) as u16;
                data[gy as usize * w as usize + gx as usize] = depth;
            }
        }
    }
    if let Some(jitter) = scene.depth_jitter {
        let a = jitter.amplitude_mm as i64;
        if a > 0 {
            for y in 0..h {
                for x in 0..w {
                    let idx = y as usize * w as usize + x as usize;
                    if data[idx] == 0 {
                        continue; // invalid stays invalid
                    }
                    let r = hash2(jitter.seed ^ (frame as u64) << 32, x, y);
                    let offset = (r % (2 * a as u64 + 1)) as i64 - a;
                    data[idx] = (data[idx] as i64 + offset).clamp(1, 65535) as u16;
                }
            }
        }
    }
    DepthFrame::new(w, h, data).expect("valid dims")
}

/// Writes the full dataset: `color_####.ppm`, `depth_####.pgm`,
/// `calib.txt` and `annotations.csv` with identity labels.
pub fn generate<P: AsRef<Path>>(scene: &SceneSpec, out_dir: P) -> Result<(), SynthError> {
    scene.validate()?;
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut annotations = crate::detection::AnnotationSet::default();
    for frame in 0..scene.frames {
        let color = render_color(scene, frame);
        let depth = render_depth(scene, frame);
        imaging::save_color(&color, dir.join(format!("color_{frame:04}.ppm")))?;
        imaging::save_depth(&depth, dir.join(format!("depth_{frame:04}.pgm")))?;
        for (si, subject) in scene.subjects.iter().enumerate() {
            annotations.insert(
                frame,
                scene.subject_rect(si, frame),
                Some(subject.label.clone()),
            );
        }
    }
    registration::save_calibration(&scene.calibration, dir.join("calib.txt"))?;
    crate::detection::save_annotations(&annotations, dir.join("annotations.csv"))
        .map_err(|e| SynthError::InvalidScene(e.to_string()))?;
    Ok(())
}

// --- scene spec file ---

/// Parses the plain-text scene format. Recognized keys:
///
/// ```text
/// frames = 60
/// width = 160
/// height = 120
/// background_depth = 1500
/// illumination_slope = 0.8      # optional, omit to disable
/// depth_jitter = 3              # optional amplitude in mm
/// jitter_seed = 9               # optional, default 1
/// subject.0.label = alice
/// subject.0.size = 48
/// subject.0.texture_seed = 101
/// subject.0.relief_seed = 201
/// subject.0.start = 40,40
/// subject.0.velocity = 1,0
/// ```
///
/// plus, optionally, the eleven calibration keys of `calib.txt`
/// (`depth.fx` .. `t.z`); when absent the calibration defaults to an
/// identity pair. Subject centers follow `start + frame * velocity`.
pub fn parse_scene_spec(text: &str) -> Result<SceneSpec, SynthError> {
    let mut globals: std::collections::BTreeMap<String, String> = Default::default();
    let mut subject_fields: std::collections::BTreeMap<u32, std::collections::BTreeMap<String, String>> =
        Default::default();
    let mut calib_lines = String::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            SynthError::Spec(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim().to_string();
        if let Some(rest) = key.strip_prefix("subject.") {
            let (idx, field) = rest.split_once('.').ok_or_else(|| {
                SynthError::Spec(format!("bad subject key {key}"))
            })?;
            let idx: u32 = idx
                .parse()
                .map_err(|_| SynthError::Spec(format!("bad subject index in {key}")))?;
            subject_fields.entry(idx).or_default().insert(field.into(), value);
        } else if key.starts_with("depth.") || key.starts_with("color.") || key.starts_with("t.") {
            calib_lines.push_str(line);
            calib_lines.push('\n');
        } else {
            globals.insert(key.into(), value);
        }
    }

    let get = |k: &str| -> Result<&String, SynthError> {
        globals
            .get(k)
            .ok_or_else(|| SynthError::Spec(format!("missing key {k}")))
    };
    let parse_num = |k: &str, v: &str| -> Result<i64, SynthError> {
        v.parse()
            .map_err(|_| SynthError::Spec(format!("bad value for {k}: {v}")))
    };

    let frames = parse_num("frames", get("frames")?)? as usize;
    let width = parse_num("width", get("width")?)? as u32;
    let height = parse_num("height", get("height")?)? as u32;
    let background = parse_num("background_depth", get("background_depth")?)? as u16;
    let illumination_slope = globals
        .get("illumination_slope")
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| SynthError::Spec(format!("bad illumination_slope: {v}")))
        })
        .transpose()?;
    let depth_jitter = match globals.get("depth_jitter") {
        Some(v) => {
            let amplitude = parse_num("depth_jitter", v)? as u16;
            let seed = globals
                .get("jitter_seed")
                .map(|s| parse_num("jitter_seed", s))
                .transpose()?
                .unwrap_or(1) as u64;
            (amplitude > 0).then_some(DepthJitter {
                amplitude_mm: amplitude,
                seed,
            })
        }
        None => None,
    };

    let known = [
        "frames",
        "width",
        "height",
        "background_depth",
        "illumination_slope",
        "depth_jitter",
        "jitter_seed",
    ];
    for key in globals.keys() {
        if !known.contains(&key.as_str()) {
            return Err(SynthError::Spec(format!("unknown key {key}")));
        }
    }

    let calibration = if calib_lines.is_empty() {
        CalibrationPair::identity(
            525.0,
            525.0,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
        )
    } else {
        registration::parse_calibration(&calib_lines)
            .map_err(|e| SynthError::Spec(e.to_string()))?
    };

    let mut subjects = Vec::new();
    let mut paths = Vec::new();
    for (expected, (idx, fields)) in subject_fields.iter().enumerate() {
        if *idx as usize != expected {
            return Err(SynthError::Spec(format!(
                "subject indices must be contiguous from 0; found {idx}"
            )));
        }
        let field = |name: &str| -> Result<&String, SynthError> {
            fields.get(name).ok_or_else(|| {
                SynthError::Spec(format!("subject.{idx}: missing {name}"))
            })
        };
        let pair = |name: &str| -> Result<(i64, i64), SynthError> {
            let v = field(name)?;
            let (a, b) = v.split_once(',').ok_or_else(|| {
                SynthError::Spec(format!("subject.{idx}.{name}: expected x,y"))
            })?;
            Ok((
                parse_num(name, a.trim())?,
                parse_num(name, b.trim())?,
            ))
        };
        let (sx, sy) = pair("start")?;
        let (vx, vy) = pair("velocity")?;
        subjects.push(SubjectSpec {
            label: field("label")?.clone(),
            size: parse_num("size", field("size")?)? as u32,
            texture_seed: parse_num("texture_seed", field("texture_seed")?)? as u64,
            relief_seed: parse_num("relief_seed", field("relief_seed")?)? as u64,
        });
        paths.push(
            (0..frames)
                .map(|f| ((sx + vx * f as i64) as i32, (sy + vy * f as i64) as i32))
                .collect(),
        );
    }

    Ok(SceneSpec {
        frames,
        color_dims: (width, height),
        depth_dims: (width, height),
        subjects,
        paths,
        background_depth_mm: background,
        illumination_slope,
        calibration,
        depth_jitter,
    })
}
