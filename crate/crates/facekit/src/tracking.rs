//! Multi-face tracking by nearest rectangle center.
//!
//! Association is greedy and globally nearest: among all (track,
//! detection) pairs within the gate, the closest pair is matched first,
//! with ties broken by track id and then detection index, so the result
//! is one-to-one and canonical. Matched tracks accumulate feature
//! samples up to a capacity, forming the per-identity online database.

use serde::Serialize;
use thiserror::Error;

use crate::detection::Detection;
use crate::features::FeatureVector;
use crate::imaging::Rect;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("feature list has {features} entries for {detections} detections")]
    MisalignedFeatures { detections: usize, features: usize },
    #[error("label hint list has {hints} entries for {detections} detections")]
    MisalignedHints { detections: usize, hints: usize },
}

#[derive(Debug, Clone)]
pub struct TrackerConfig {
    /// Association gate in pixels.
    pub max_distance: f64,
    /// Frames a track may go unmatched before it is dropped.
    pub max_missed: u32,
    /// Sample capacity per track.
    pub max_samples: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            max_distance: 80.0,
            max_missed: 10,
            max_samples: 50,
        }
    }
}

/// A persistent identity with its accumulated feature samples.
#[derive(Debug, Clone)]
pub struct FaceTrack {
    pub track_id: u64,
    pub label: String,
    pub last_center: (f64, f64),
    pub last_rect: Rect,
    pub last_seen: usize,
    pub missed: u32,
    pub samples: Vec<FeatureVector>,
}

/// Result of matching one frame's detections against the live tracks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    /// (track_id, detection index) pairs.
    pub matches: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_detections: Vec<usize>,
}

/// Greedy globally-nearest assignment under the distance gate.
pub fn associate(
    tracks: &[FaceTrack],
    detections: &[Detection],
    cfg: &TrackerConfig,
) -> Association {
    let gate2 = cfg.max_distance * cfg.max_distance;
    let mut candidates: Vec<(f64, u64, usize)> = Vec::new();
    for track in tracks {
        for (det_idx, det) in detections.iter().enumerate() {
            let (cx, cy) = det.rect.center();
            let dx = cx - track.last_center.0;
            let dy = cy - track.last_center.1;
            let d2 = dx * dx + dy * dy;
            if d2 <= gate2 {
                candidates.push((d2, track.track_id, det_idx));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut matches = Vec::new();
    for (_, track_id, det_idx) in candidates {
        let t_pos = tracks
            .iter()
            .position(|t| t.track_id == track_id)
            .expect("candidate from tracks");
        if track_used[t_pos] || det_used[det_idx] {
            continue;
        }
        track_used[t_pos] = true;
        det_used[det_idx] = true;
        matches.push((track_id, det_idx));
    }
    Association {
        matches,
        unmatched_tracks: tracks
            .iter()
            .zip(&track_used)
            .filter(|(_, used)| !**used)
            .map(|(t, _)| t.track_id)
            .collect(),
        unmatched_detections: det_used
            .iter()
            .enumerate()
            .filter(|(_, used)| !**used)
            .map(|(i, _)| i)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackEventKind {
    Created,
    Updated,
    Terminated,
}

/// One audit record, emitted as a JSON line by the pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct TrackEvent {
    pub frame: usize,
    pub track_id: u64,
    pub label: String,
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
    pub event: TrackEventKind,
}

/// Per-detection assignment after a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackAssignment {
    pub track_id: u64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    /// Aligned with the step's detections.
    pub assignments: Vec<TrackAssignment>,
    pub events: Vec<TrackEvent>,
    /// Tracks removed this step, with their accumulated samples.
    pub terminated: Vec<FaceTrack>,
}

/// Frame-ordered tracker state. Steps must be applied in frame order;
/// snapshots may be read concurrently.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<FaceTrack>,
    next_track_id: u64,
    next_auto_label: u64,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Tracker {
            cfg,
            tracks: Vec::new(),
            next_track_id: 0,
            next_auto_label: 0,
        }
    }

    pub fn tracks(&self) -> &[FaceTrack] {
        &self.tracks
    }

    /// Advances the tracker by one frame. `features` must align with
    /// `detections`; `label_hints` (same alignment) override the
    /// personA/personB auto-label when a new track spawns.
    pub fn step(
        &mut self,
        frame_index: usize,
        detections: &[Detection],
        features: &[FeatureVector],
        label_hints: &[Option<String>],
    ) -> Result<StepResult, TrackError> {
        if features.len() != detections.len() {
            return Err(TrackError::MisalignedFeatures {
                detections: detections.len(),
                features: features.len(),
            });
        }
        if label_hints.len() != detections.len() {
            return Err(TrackError::MisalignedHints {
                detections: detections.len(),
                hints: label_hints.len(),
            });
        }

        let association = associate(&self.tracks, detections, &self.cfg);
        let mut assignments: Vec<Option<TrackAssignment>> = vec![None; detections.len()];
        let mut events = Vec::new();

        let mut matches = association.matches.clone();
        matches.sort_by_key(|&(track_id, _)| track_id);
        for (track_id, det_idx) in matches {
            let track = self
                .tracks
                .iter_mut()
                .find(|t| t.track_id == track_id)
                .expect("matched track exists");
            let det = &detections[det_idx];
            track.last_center = det.rect.center();
            track.last_rect = det.rect;
            track.last_seen = frame_index;
            track.missed = 0;
            if track.samples.len() < self.cfg.max_samples {
                track.samples.push(features[det_idx].clone());
            }
            events.push(event(frame_index, track, TrackEventKind::Updated));
            assignments[det_idx] = Some(TrackAssignment {
                track_id,
                label: track.label.clone(),
            });
        }

        for det_idx in association.unmatched_detections {
            let det = &detections[det_idx];
            let label = label_hints[det_idx].clone().unwrap_or_else(|| {
                let l = auto_label(self.next_auto_label);
                self.next_auto_label += 1;
                l
            });
            let track = FaceTrack {
                track_id: self.next_track_id,
                label: label.clone(),
                last_center: det.rect.center(),
                last_rect: det.rect,
                last_seen: frame_index,
                missed: 0,
                samples: vec![features[det_idx].clone()],
            };
            self.next_track_id += 1;
            events.push(event(frame_index, &track, TrackEventKind::Created));
            assignments[det_idx] = Some(TrackAssignment {
                track_id: track.track_id,
                label,
            });
            self.tracks.push(track);
        }

        let mut terminated = Vec::new();
        for track_id in association.unmatched_tracks {
            let track = self
                .tracks
                .iter_mut()
                .find(|t| t.track_id == track_id)
                .expect("unmatched track exists");
            track.missed += 1;
        }
        let max_missed = self.cfg.max_missed;
        let mut kept = Vec::with_capacity(self.tracks.len());
        for track in self.tracks.drain(..) {
            if track.missed > max_missed {
                events.push(event(frame_index, &track, TrackEventKind::Terminated));
                terminated.push(track);
            } else {
                kept.push(track);
            }
        }
        self.tracks = kept;

        Ok(StepResult {
            assignments: assignments
                .into_iter()
                .map(|a| a.expect("every detection assigned"))
                .collect(),
            events,
            terminated,
        })
    }
}

fn event(frame: usize, track: &FaceTrack, kind: TrackEventKind) -> TrackEvent {
    TrackEvent {
        frame,
        track_id: track.track_id,
        label: track.label.clone(),
        x: track.last_rect.x,
        y: track.last_rect.y,
        w: track.last_rect.w,
        h: track.last_rect.h,
        event: kind,
    }
}

/// personA, personB, ... personZ, personAA, personAB, ...
fn auto_label(index: u64) -> String {
    let mut n = index + 1;
    let mut letters = Vec::new();
    while n > 0 {
        let rem = ((n - 1) % 26) as u8;
        letters.push(b'A' + rem);
        n = (n - 1) / 26;
    }
    letters.reverse();
    format!("person{}", String::from_utf8(letters).unwrap())
}
