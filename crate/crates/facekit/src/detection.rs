//! Face-detection contract over color frames.
//!
//! Detection is pluggable so a cascade detector can be slotted in later;
//! the shipped implementation replays rectangles from an annotation CSV
//! (`frame,x,y,w,h[,label]`, header row optional).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::imaging::{ColorFrame, Rect};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("annotations line {line}: {message}")]
    MalformedRow { line: usize, message: String },
}

/// One detected face in color space.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub rect: Rect,
    pub frame_index: usize,
    pub score: f64,
}

/// Anything that can produce detections for a frame.
pub trait FaceDetector {
    fn detect(&self, frame_index: usize, frame: &ColorFrame) -> Vec<Detection>;
}

/// Ground-truth rectangles grouped by frame, each with an optional
/// identity label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    frames: BTreeMap<usize, Vec<(Rect, Option<String>)>>,
}

impl AnnotationSet {
    pub fn insert(&mut self, frame_index: usize, rect: Rect, label: Option<String>) {
        self.frames.entry(frame_index).or_default().push((rect, label));
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn max_frame_index(&self) -> Option<usize> {
        self.frames.keys().next_back().copied()
    }

    /// Distinct labels present anywhere in the set, sorted.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .frames
            .values()
            .flatten()
            .filter_map(|(_, l)| l.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Detections plus their annotation labels, rects clamped to the
    /// frame. Rows whose rect misses the frame entirely are dropped.
    pub fn detect_labeled(
        &self,
        frame_index: usize,
        frame_dims: (u32, u32),
    ) -> Vec<(Detection, Option<String>)> {
        let Some(rows) = self.frames.get(&frame_index) else {
            return Vec::new();
        };
        rows.iter()
            .filter_map(|(rect, label)| {
                let clamped = rect.clamped_to(frame_dims.0, frame_dims.1)?;
                Some((
                    Detection {
                        rect: clamped,
                        frame_index,
                        score: 1.0,
                    },
                    label.clone(),
                ))
            })
            .collect()
    }
}

impl FaceDetector for AnnotationSet {
    fn detect(&self, frame_index: usize, frame: &ColorFrame) -> Vec<Detection> {
        self.detect_labeled(frame_index, (frame.width(), frame.height()))
            .into_iter()
            .map(|(d, _)| d)
            .collect()
    }
}

pub fn parse_annotations(text: &str) -> Result<AnnotationSet, DetectionError> {
    let mut set = AnnotationSet::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 && line.starts_with("frame,") {
            continue; // optional header
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(DetectionError::MalformedRow {
                line: i + 1,
                message: format!("expected 5 or 6 fields, found {}", fields.len()),
            });
        }
        let num = |idx: usize| -> Result<i64, DetectionError> {
            fields[idx].parse().map_err(|_| DetectionError::MalformedRow {
                line: i + 1,
                message: format!("bad number {}", fields[idx]),
            })
        };
        let frame = num(0)?;
        let (x, y, w, h) = (num(1)?, num(2)?, num(3)?, num(4)?);
        if frame < 0 {
            return Err(DetectionError::MalformedRow {
                line: i + 1,
                message: "negative frame index".into(),
            });
        }
        if w < 1 || h < 1 {
            return Err(DetectionError::MalformedRow {
                line: i + 1,
                message: format!("non-positive dimensions {w}x{h}"),
            });
        }
        let label = fields
            .get(5)
            .filter(|s| !s.is_empty())
            .map(|s| s.to_string());
        set.insert(
            frame as usize,
            Rect::new(x as i32, y as i32, w as u32, h as u32),
            label,
        );
    }
    Ok(set)
}

pub fn load_annotations<P: AsRef<Path>>(path: P) -> Result<AnnotationSet, DetectionError> {
    parse_annotations(&fs::read_to_string(path)?)
}

pub fn annotations_to_csv(set: &AnnotationSet) -> String {
    let mut out = String::from("frame,x,y,w,h,label\n");
    for (frame, rows) in &set.frames {
        for (rect, label) in rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                frame, rect.x, rect.y, rect.w, rect.h
            ));
            match label {
                Some(l) => out.push_str(&format!(",{l}\n")),
                None => out.push('\n'),
            }
        }
    }
    out
}

pub fn save_annotations<P: AsRef<Path>>(
    set: &AnnotationSet,
    path: P,
) -> Result<(), DetectionError> {
    fs::write(path, annotations_to_csv(set))?;
    Ok(())
}
