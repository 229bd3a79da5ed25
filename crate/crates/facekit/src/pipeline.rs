//! End-to-end orchestration over recorded datasets.
//!
//! A dataset directory holds `color_####.ppm` / `depth_####.pgm` pairs
//! (4-digit frame index, contiguous from 0), `calib.txt` and
//! `annotations.csv`. Enrollment runs detection, registration, feature
//! extraction and tracking per frame and trains a one-vs-rest model
//! from the per-identity sample databases; recognition replays the same
//! ROI/feature path and predicts per detection.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{self, ClassifyError, OvrModel, Prediction, TrainConfig};
use crate::detection::{self, AnnotationSet, Detection, DetectionError};
use crate::features::{self, Engine, FeatureError, FeatureVector, LbpParams};
use crate::imaging::{self, ColorFrame, DepthFrame, GrayFrame, ImagingError};
use crate::registration::{self, CalibrationPair, RegistrationError};
use crate::synthdata::{self, SynthError};
use crate::tracking::{TrackError, TrackEvent, Tracker, TrackerConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Tracking(#[from] TrackError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("datasets do not share identity labels: train {train:?}, test {test:?}")]
    LabelMismatch {
        train: Vec<String>,
        test: Vec<String>,
    },
    #[error("model/config mismatch: {0}")]
    ModelMismatch(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code: 3 for internal consistency failures (the
    /// serial/parallel equivalence gate), 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Features(FeatureError::EquivalenceGate { .. }) => 3,
            _ => 2,
        }
    }
}

/// Which raster feeds feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    Depth,
    Gray,
}

impl FeatureSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSource::Depth => "depth",
            FeatureSource::Gray => "gray",
        }
    }
}

/// Tracked enrollment accumulates samples along tracks; single-frame
/// enrollment keeps only each identity's first detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnrollmentMode {
    Tracked,
    SingleFrame,
}

impl EnrollmentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnrollmentMode::Tracked => "tracked",
            EnrollmentMode::SingleFrame => "single-frame",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: FeatureSource,
    pub roi_size: u32,
    pub grid: (u32, u32),
    pub tracker: TrackerConfig,
    pub train: TrainConfig,
    pub enrollment: EnrollmentMode,
    pub engine: Engine,
    pub reject_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source: FeatureSource::Depth,
            roi_size: 200,
            grid: (1, 1),
            tracker: TrackerConfig::default(),
            train: TrainConfig::default(),
            enrollment: EnrollmentMode::Tracked,
            engine: Engine::Serial,
            reject_threshold: f64::NEG_INFINITY,
        }
    }
}

impl RunConfig {
    fn params(&self) -> Result<LbpParams, PipelineError> {
        if self.roi_size < 3 {
            return Err(PipelineError::Dataset(format!(
                "roi size {} is smaller than 3",
                self.roi_size
            )));
        }
        Ok(LbpParams::with_grid(self.grid.0, self.grid.1)?)
    }
}

/// An opened dataset directory. Frames are loaded on demand.
pub struct Dataset {
    dir: PathBuf,
    frame_count: usize,
    calibration: CalibrationPair,
    annotations: AnnotationSet,
}

impl Dataset {
    pub fn open<P: AsRef<Path>>(dir: P) -> Result<Self, PipelineError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(PipelineError::Dataset(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let count_contiguous = |prefix: &str, ext: &str| -> usize {
            (0..)
                .take_while(|i| dir.join(format!("{prefix}{i:04}.{ext}")).is_file())
                .count()
        };
        let colors = count_contiguous("color_", "ppm");
        let depths = count_contiguous("depth_", "pgm");
        if colors == 0 {
            return Err(PipelineError::Dataset(format!(
                "no color_0000.ppm in {}",
                dir.display()
            )));
        }
        if colors != depths {
            return Err(PipelineError::Dataset(format!(
                "{colors} color frames but {depths} depth frames"
            )));
        }
        let calibration = registration::load_calibration(dir.join("calib.txt"))?;
        let annotations = detection::load_annotations(dir.join("annotations.csv"))?;
        if let Some(max) = annotations.max_frame_index() {
            if max >= colors {
                return Err(PipelineError::Dataset(format!(
                    "annotation references frame {max} but dataset has {colors} frames"
                )));
            }
        }
        Ok(Dataset {
            dir,
            frame_count: colors,
            calibration,
            annotations,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn calibration(&self) -> &CalibrationPair {
        &self.calibration
    }

    pub fn annotations(&self) -> &AnnotationSet {
        &self.annotations
    }

    pub fn color_frame(&self, index: usize) -> Result<ColorFrame, PipelineError> {
        Ok(imaging::load_color(
            self.dir.join(format!("color_{index:04}.ppm")),
        )?)
    }

    pub fn depth_frame(&self, index: usize) -> Result<DepthFrame, PipelineError> {
        Ok(imaging::load_depth(
            self.dir.join(format!("depth_{index:04}.pgm")),
        )?)
    }
}

/// ROI + feature path shared by enrollment and recognition. Returns
/// `None` (with a warning) when a depth ROI has no depth support.
fn detection_feature(
    dataset: &Dataset,
    gray: &GrayFrame,
    depth: &DepthFrame,
    det: &Detection,
    cfg: &RunConfig,
    params: &LbpParams,
) -> Result<Option<FeatureVector>, PipelineError> {
    let feature: Result<FeatureVector, PipelineError> = match cfg.source {
        FeatureSource::Depth => {
            let color_dims = (gray.width(), gray.height());
            let roi_rect = match registration::face_depth_roi(
                det.rect,
                color_dims,
                depth,
                &dataset.calibration,
            ) {
                Ok(r) => r,
                Err(RegistrationError::NoDepthSupport) => {
                    log::warn!(
                        "frame {}: no depth support under detection at ({}, {}); skipped",
                        det.frame_index,
                        det.rect.x,
                        det.rect.y
                    );
                    return Ok(None);
                }
                Err(e) => return Err(e.into()),
            };
            let cropped = depth.crop(roi_rect)?.resize(cfg.roi_size, cfg.roi_size);
            Ok(features::extract(&cropped, params, cfg.engine)?)
        }
        FeatureSource::Gray => {
            let cropped = gray
                .crop(det.rect)?
                .resize(cfg.roi_size, cfg.roi_size);
            Ok(features::extract(&cropped, params, cfg.engine)?)
        }
    };
    feature.map(Some)
}

/// Output of an enrollment run.
pub struct EnrollOutput {
    pub model: OvrModel,
    pub track_log: Vec<TrackEvent>,
    pub samples_per_label: BTreeMap<String, usize>,
}

/// Builds the per-identity database over the dataset and trains the
/// one-vs-rest model.
pub fn run_enroll(dataset: &Dataset, cfg: &RunConfig) -> Result<EnrollOutput, PipelineError> {
    let params = cfg.params()?;
    let labels = dataset.annotations.labels();
    if labels.len() < 2 {
        return Err(PipelineError::Dataset(format!(
            "enrollment needs at least 2 labeled identities, found {}",
            labels.len()
        )));
    }

    let mut tracker = Tracker::new(cfg.tracker.clone());
    let mut track_log = Vec::new();
    let mut database: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let mut first_sample: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let harvest = |track: &crate::tracking::FaceTrack,
                   database: &mut BTreeMap<String, Vec<Vec<f64>>>| {
        let entry = database.entry(track.label.clone()).or_default();
        for s in &track.samples {
            entry.push(s.values().to_vec());
        }
    };

    for frame_index in 0..dataset.frame_count {
        let color = dataset.color_frame(frame_index)?;
        let depth = dataset.depth_frame(frame_index)?;
        let gray = color.to_gray();
        let labeled = dataset
            .annotations
            .detect_labeled(frame_index, (color.width(), color.height()));

        let mut detections = Vec::new();
        let mut feats = Vec::new();
        let mut hints = Vec::new();
        for (det, label) in labeled {
            let Some(feature) =
                detection_feature(dataset, &gray, &depth, &det, cfg, &params)?
            else {
                continue;
            };
            if let Some(l) = &label {
                first_sample
                    .entry(l.clone())
                    .or_insert_with(|| feature.values().to_vec());
            }
            detections.push(det);
            feats.push(feature);
            hints.push(label);
        }

        let step = tracker.step(frame_index, &detections, &feats, &hints)?;
        track_log.extend(step.events);
        for track in &step.terminated {
            harvest(track, &mut database);
        }
    }
    for track in tracker.tracks() {
        harvest(track, &mut database);
    }

    let training: BTreeMap<String, Vec<Vec<f64>>> = match cfg.enrollment {
        EnrollmentMode::Tracked => database
            .into_iter()
            .filter(|(label, _)| labels.contains(label))
            .collect(),
        EnrollmentMode::SingleFrame => first_sample
            .into_iter()
            .map(|(label, sample)| (label, vec![sample]))
            .collect(),
    };

    for label in &labels {
        if training.get(label).is_none_or(Vec::is_empty) {
            return Err(PipelineError::Dataset(format!(
                "identity {label} has no usable samples (no depth support on any frame?)"
            )));
        }
    }

    let samples_per_label = training
        .iter()
        .map(|(l, xs)| (l.clone(), xs.len()))
        .collect();
    let model = classify::train_ovr(&training, &cfg.train, cfg.grid)?;
    Ok(EnrollOutput {
        model,
        track_log,
        samples_per_label,
    })
}

/// One recognition output row; serialized as a JSON line.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RecognitionRecord {
    pub frame: usize,
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
    pub label: String,
    pub score: f64,
}

/// Labels every detection in the dataset with the model.
pub fn run_recognize(
    dataset: &Dataset,
    model: &OvrModel,
    cfg: &RunConfig,
) -> Result<Vec<RecognitionRecord>, PipelineError> {
    let params = cfg.params()?;
    if model.grid() != cfg.grid {
        return Err(PipelineError::ModelMismatch(format!(
            "model was trained with grid {}x{} but the run is configured for {}x{}",
            model.grid().0,
            model.grid().1,
            cfg.grid.0,
            cfg.grid.1
        )));
    }
    if model.feature_length() != params.feature_length() {
        return Err(PipelineError::ModelMismatch(format!(
            "model feature length {} does not match grid {}x{}",
            model.feature_length(),
            cfg.grid.0,
            cfg.grid.1
        )));
    }

    let mut records = Vec::new();
    for frame_index in 0..dataset.frame_count {
        let color = dataset.color_frame(frame_index)?;
        let depth = dataset.depth_frame(frame_index)?;
        let gray = color.to_gray();
        for (det, _) in dataset
            .annotations
            .detect_labeled(frame_index, (color.width(), color.height()))
        {
            let Some(feature) =
                detection_feature(dataset, &gray, &depth, &det, cfg, &params)?
            else {
                continue;
            };
            let (label, score) = match model.predict(feature.values(), cfg.reject_threshold)? {
                Prediction::Known { label, score } => (label, score),
                Prediction::Unknown { best_score } => ("unknown".to_string(), best_score),
            };
            records.push(RecognitionRecord {
                frame: frame_index,
                x: det.rect.x,
                y: det.rect.y,
                w: det.rect.w,
                h: det.rect.h,
                label,
                score,
            });
        }
    }
    Ok(records)
}

pub fn records_to_jsonl(records: &[RecognitionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn track_log_to_jsonl(events: &[TrackEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

/// Accuracy report for one (source, enrollment) cell.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub source: FeatureSource,
    pub enrollment: EnrollmentMode,
    pub correct: u64,
    pub total: u64,
    pub frames: usize,
    /// (true label, predicted label) -> count.
    pub confusion: BTreeMap<(String, String), u64>,
    pub enroll_ms: f64,
    pub predict_ms: f64,
    pub self_test: bool,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "source,enrollment,correct,total,accuracy,frames,enroll_ms,predict_ms,self_test\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{:.4},{},{:.1},{:.1},{}\n",
            r.source.as_str(),
            r.enrollment.as_str(),
            r.correct,
            r.total,
            r.accuracy(),
            r.frames,
            r.enroll_ms,
            r.predict_ms,
            r.self_test
        ));
    }
    out
}

/// Runs the 2x2 evaluation matrix (feature source x enrollment mode):
/// enroll on the train set, score accuracy against the test set's
/// ground-truth labels.
pub fn run_evaluate(
    train: &Dataset,
    test: &Dataset,
    cfg: &RunConfig,
) -> Result<Vec<EvalReport>, PipelineError> {
    let train_labels = train.annotations.labels();
    let test_labels = test.annotations.labels();
    if train_labels != test_labels {
        return Err(PipelineError::LabelMismatch {
            train: train_labels,
            test: test_labels,
        });
    }
    let self_test = train.dir == test.dir;

    let mut reports = Vec::with_capacity(4);
    for source in [FeatureSource::Depth, FeatureSource::Gray] {
        for enrollment in [EnrollmentMode::Tracked, EnrollmentMode::SingleFrame] {
            let cell_cfg = RunConfig {
                source,
                enrollment,
                ..cfg.clone()
            };
            let t0 = Instant::now();
            let enrolled = run_enroll(train, &cell_cfg)?;
            let enroll_ms = t0.elapsed().as_secs_f64() * 1e3;

            let t1 = Instant::now();
            let params = cell_cfg.params()?;
            let mut correct = 0u64;
            let mut total = 0u64;
            let mut confusion: BTreeMap<(String, String), u64> = BTreeMap::new();
            for frame_index in 0..test.frame_count {
                let color = test.color_frame(frame_index)?;
                let depth = test.depth_frame(frame_index)?;
                let gray = color.to_gray();
                for (det, label) in test
                    .annotations
                    .detect_labeled(frame_index, (color.width(), color.height()))
                {
                    let Some(truth) = label else { continue };
                    let Some(feature) =
                        detection_feature(test, &gray, &depth, &det, &cell_cfg, &params)?
                    else {
                        continue;
                    };
                    let predicted = match enrolled
                        .model
                        .predict(feature.values(), cell_cfg.reject_threshold)?
                    {
                        Prediction::Known { label, .. } => label,
                        Prediction::Unknown { .. } => "unknown".to_string(),
                    };
                    total += 1;
                    if predicted == truth {
                        correct += 1;
                    }
                    *confusion.entry((truth, predicted)).or_default() += 1;
                }
            }
            let predict_ms = t1.elapsed().as_secs_f64() * 1e3;
            reports.push(EvalReport {
                source,
                enrollment,
                correct,
                total,
                frames: test.frame_count,
                confusion,
                enroll_ms,
                predict_ms,
                self_test,
            });
        }
    }
    Ok(reports)
}

/// Benchmarks feature extraction over the standard ROI sizes and worker
/// counts, gated on serial/parallel equivalence.
pub fn run_bench() -> Result<features::BenchReport, PipelineError> {
    Ok(features::bench_extract(&[100, 200, 400], 5, &[1, 2, 4, 8])?)
}

/// Parses a scene spec file and generates the dataset.
pub fn run_synth<P: AsRef<Path>, Q: AsRef<Path>>(
    spec_path: P,
    out_dir: Q,
) -> Result<(), PipelineError> {
    let text = std::fs::read_to_string(spec_path)?;
    let scene = synthdata::parse_scene_spec(&text)?;
    synthdata::generate(&scene, out_dir)?;
    Ok(())
}
