//! Linear soft-margin SVM training and one-vs-rest prediction.
//!
//! Training minimizes `lambda/2 ||w||^2 + mean hinge loss` by epoch-based
//! subgradient descent with step `1/(lambda t)`, visiting samples in
//! seeded-shuffle order, so a given input and seed always reproduce the
//! same model bit for bit. The bias moves with the same step as a folded
//! coordinate of the weight vector: a raw additive bias update under the
//! `1/(lambda t)` schedule random-walks (its step sums diverge), while the
//! folded form inherits the weight average's stability at the cost of a
//! negligible `lambda/2 b^2` term in the effective objective.
//!
//! The returned machine is the average of the last half of the iterates.
//! Subgradient methods carry no last-iterate guarantee; the tail average
//! converges and removes the endpoint oscillation that otherwise makes
//! tightly-clustered training sets (many near-duplicate samples per
//! identity) flip predictions with the sample count.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("a class has no samples")]
    EmptyClass,
    #[error("one-vs-rest training needs at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model version mismatch: found {0:?}")]
    VersionMismatch(String),
    #[error("corrupted model payload: {0}")]
    Corrupted(String),
}

/// One binary decision function.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

impl LinearSvm {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-4,
            epochs: 200,
            seed: 42,
        }
    }
}

/// Per-identity linear machines, ordered lexicographically by label.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    entries: Vec<(String, LinearSvm)>,
    feature_length: usize,
    grid: (u32, u32),
}

/// Prediction outcome; `Unknown` only occurs when a reject threshold is
/// set (the default threshold of -inf keeps the classifier closed-set).
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Known { label: String, score: f64 },
    Unknown { best_score: f64 },
}

fn validate_samples(samples: &[Vec<f64>], dim: usize) -> Result<(), ClassifyError> {
    for s in samples {
        if s.len() != dim {
            return Err(ClassifyError::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite);
        }
    }
    Ok(())
}

/// Trains one hinge-loss machine on positives vs negatives.
pub fn train_binary(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<LinearSvm, ClassifyError> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(ClassifyError::EmptyClass);
    }
    let dim = positives[0].len();
    validate_samples(positives, dim)?;
    validate_samples(negatives, dim)?;

    let samples: Vec<(&[f64], f64)> = positives
        .iter()
        .map(|x| (x.as_slice(), 1.0))
        .chain(negatives.iter().map(|x| (x.as_slice(), -1.0)))
        .collect();

    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();

    let epochs = cfg.epochs.max(1);
    let total_steps = epochs as u64 * samples.len() as u64;
    let average_from = total_steps / 2 + 1;
    let mut weight_sum = vec![0.0f64; dim];
    let mut bias_sum = 0.0f64;
    let mut averaged: u64 = 0;

    let mut t: u64 = 1;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (x, y) = samples[idx];
            let eta = 1.0 / (cfg.lambda * t as f64);
            let margin = y * (weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias);
            let shrink = 1.0 - eta * cfg.lambda; // = 1 - 1/t
            if margin < 1.0 {
                for (w, v) in weights.iter_mut().zip(x) {
                    *w = *w * shrink + eta * y * v;
                }
                bias = bias * shrink + eta * y;
            } else {
                for w in weights.iter_mut() {
                    *w *= shrink;
                }
                bias *= shrink;
            }
            if t >= average_from {
                for (acc, w) in weight_sum.iter_mut().zip(&weights) {
                    *acc += w;
                }
                bias_sum += bias;
                averaged += 1;
            }
            t += 1;
        }
    }
    let scale = 1.0 / averaged as f64;
    Ok(LinearSvm {
        weights: weight_sum.iter().map(|w| w * scale).collect(),
        bias: bias_sum * scale,
        lambda: cfg.lambda,
    })
}

/// Regularized objective the trainer descends.
pub fn objective(
    svm: &LinearSvm,
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
) -> f64 {
    let norm2: f64 = svm.weights.iter().map(|w| w * w).sum();
    let hinge = |x: &Vec<f64>, y: f64| (1.0 - y * svm.score(x)).max(0.0);
    let total: f64 = positives.iter().map(|x| hinge(x, 1.0)).sum::<f64>()
        + negatives.iter().map(|x| hinge(x, -1.0)).sum::<f64>();
    svm.lambda / 2.0 * norm2 + total / (positives.len() + negatives.len()) as f64
}

/// Trains one machine per label against all other labels' samples.
pub fn train_ovr(
    database: &BTreeMap<String, Vec<Vec<f64>>>,
    cfg: &TrainConfig,
    grid: (u32, u32),
) -> Result<OvrModel, ClassifyError> {
    if database.len() < 2 {
        return Err(ClassifyError::TooFewLabels(database.len()));
    }
    let feature_length = database
        .values()
        .flatten()
        .next()
        .ok_or(ClassifyError::EmptyClass)?
        .len();
    let mut entries = Vec::with_capacity(database.len());
    // BTreeMap iteration is lexicographic, which fixes the label order.
    for (label, positives) in database {
        if positives.is_empty() {
            return Err(ClassifyError::EmptyClass);
        }
        let negatives: Vec<Vec<f64>> = database
            .iter()
            .filter(|(other, _)| *other != label)
            .flat_map(|(_, xs)| xs.iter().cloned())
            .collect();
        let svm = train_binary(positives, &negatives, cfg)?;
        entries.push((label.clone(), svm));
    }
    Ok(OvrModel {
        entries,
        feature_length,
        grid,
    })
}

impl OvrModel {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn machines(&self) -> &[(String, LinearSvm)] {
        &self.entries
    }

    pub fn feature_length(&self) -> usize {
        self.feature_length
    }

    pub fn grid(&self) -> (u32, u32) {
        self.grid
    }

    /// Argmax over per-label scores, ties to the lexicographically
    /// smaller label; `Unknown` when the best score is below the reject
    /// threshold.
    pub fn predict(&self, x: &[f64], reject_threshold: f64) -> Result<Prediction, ClassifyError> {
        if x.len() != self.feature_length {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.feature_length,
                got: x.len(),
            });
        }
        let mut best: Option<(&str, f64)> = None;
        for (label, svm) in &self.entries {
            let score = svm.score(x);
            let better = match best {
                None => true,
                Some((bl, bs)) => score > bs || (score == bs && label.as_str() < bl),
            };
            if better {
                best = Some((label, score));
            }
        }
        let (label, score) = best.expect("model has at least one machine");
        if score < reject_threshold {
            Ok(Prediction::Unknown { best_score: score })
        } else {
            Ok(Prediction::Known {
                label: label.to_string(),
                score,
            })
        }
    }
}

// --- model file ---

const MODEL_HEADER: &str = "rgbd-facekit-model v1";

/// Serializes with 18 significant digits so every f64 survives the
/// round trip exactly.
pub fn model_to_string(model: &OvrModel) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(&format!("grid {} {}\n", model.grid.0, model.grid.1));
    out.push_str(&format!("feature_length {}\n", model.feature_length));
    let lambda = model.entries.first().map(|(_, m)| m.lambda).unwrap_or(0.0);
    out.push_str(&format!("lambda {:.17e}\n", lambda));
    for (label, svm) in &model.entries {
        out.push_str(label);
        out.push('\n');
        out.push_str(&format!("{:.17e}\n", svm.bias));
        let mut first = true;
        for w in &svm.weights {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{w:.17e}"));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn save_model<P: AsRef<Path>>(model: &OvrModel, path: P) -> Result<(), ClassifyError> {
    fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn parse_model(text: &str) -> Result<OvrModel, ClassifyError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ClassifyError::Corrupted("empty file".into()))?;
    if header != MODEL_HEADER {
        return Err(ClassifyError::VersionMismatch(header.to_string()));
    }

    let grid_line = lines
        .next()
        .ok_or_else(|| ClassifyError::Corrupted("missing grid".into()))?;
    let grid = parse_prefixed_pair(grid_line, "grid")?;
    let fl_line = lines
        .next()
        .ok_or_else(|| ClassifyError::Corrupted("missing feature_length".into()))?;
    let feature_length: usize = parse_prefixed(fl_line, "feature_length")?;
    let lambda_line = lines
        .next()
        .ok_or_else(|| ClassifyError::Corrupted("missing lambda".into()))?;
    let lambda: f64 = parse_prefixed(lambda_line, "lambda")?;

    let mut entries = Vec::new();
    while let Some(label) = lines.next() {
        let bias_line = lines
            .next()
            .ok_or_else(|| ClassifyError::Corrupted(format!("missing bias for {label}")))?;
        let bias: f64 = bias_line
            .trim()
            .parse()
            .map_err(|_| ClassifyError::Corrupted(format!("bad bias for {label}")))?;
        let weights_line = lines
            .next()
            .ok_or_else(|| ClassifyError::Corrupted(format!("missing weights for {label}")))?;
        let weights = weights_line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| ClassifyError::Corrupted(format!("bad weight {tok}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if weights.len() != feature_length {
            return Err(ClassifyError::Corrupted(format!(
                "label {label}: {} weights, expected {feature_length}",
                weights.len()
            )));
        }
        entries.push((
            label.to_string(),
            LinearSvm {
                weights,
                bias,
                lambda,
            },
        ));
    }
    if entries.is_empty() {
        return Err(ClassifyError::Corrupted("no machines".into()));
    }
    Ok(OvrModel {
        entries,
        feature_length,
        grid,
    })
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<OvrModel, ClassifyError> {
    parse_model(&fs::read_to_string(path)?)
}

fn parse_prefixed<T: std::str::FromStr>(line: &str, prefix: &str) -> Result<T, ClassifyError> {
    line.strip_prefix(prefix)
        .map(str::trim)
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| ClassifyError::Corrupted(format!("bad {prefix} line: {line}")))
}

fn parse_prefixed_pair(line: &str, prefix: &str) -> Result<(u32, u32), ClassifyError> {
    let rest = line
        .strip_prefix(prefix)
        .ok_or_else(|| ClassifyError::Corrupted(format!("bad {prefix} line: {line}")))?;
    let mut parts = rest.split_whitespace();
    let a = parts.next().and_then(|s| s.parse().ok());
    let b = parts.next().and_then(|s| s.parse().ok());
    match (a, b, parts.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(ClassifyError::Corrupted(format!("bad {prefix} line: {line}"))),
    }
}
