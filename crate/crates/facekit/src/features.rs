//! LBP texture features over gray and depth ROIs.
//!
//! The operator is the 3x3 form (8 samples at radius 1): each of the
//! eight neighbors is thresholded against the center with `>=` counting
//! as 1, and the resulting bits are weighted clockwise from the top-left
//! corner:
//!
//! ```text
//!   1    2    4
//! 128         8
//!  64   32   16
//! ```
//!
//! Codes over the interior of a ROI (the 1-pixel border is skipped, no
//! padding) are binned into a 256-bin histogram per grid block and the
//! blocks are concatenated. The comparison runs on raw sample values, so
//! 8-bit gray and 16-bit depth ROIs go through the identical formula.
//!
//! Two engines produce the feature vector: a serial reference and a
//! row-band data-parallel engine that merges private integer count
//! arrays. The parallel result is bit-identical to serial for every
//! worker count; the benchmark harness refuses to report timings unless
//! that equivalence holds on the benchmarked input.

use std::time::Instant;

use thiserror::Error;

use crate::imaging::{GrayFrame, Raster};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("roi {width}x{height} is smaller than 3x3")]
    RoiTooSmall { width: u32, height: u32 },
    #[error("grid {kx}x{ky} must be at least 1x1")]
    InvalidGrid { kx: u32, ky: u32 },
    #[error("grid {kx}x{ky} larger than code map {width}x{height}")]
    GridTooLarge {
        kx: u32,
        ky: u32,
        width: u32,
        height: u32,
    },
    #[error("worker count must be at least 1")]
    InvalidWorkerCount,
    #[error("benchmark needs at least 3 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("equivalence gate: parallel({workers}) differs from serial on a {size}x{size} input")]
    EquivalenceGate { size: u32, workers: usize },
}

pub const HISTOGRAM_BINS: usize = 256;

/// Operator parameters. The sample count and radius are fixed to the
/// 3x3 operator; only the histogram grid varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LbpParams {
    grid: (u32, u32),
}

impl LbpParams {
    pub const SAMPLE_COUNT: u32 = 8;
    pub const RADIUS: u32 = 1;

    pub fn with_grid(kx: u32, ky: u32) -> Result<Self, FeatureError> {
        if kx == 0 || ky == 0 {
            return Err(FeatureError::InvalidGrid { kx, ky });
        }
        Ok(LbpParams { grid: (kx, ky) })
    }

    pub fn grid(&self) -> (u32, u32) {
        self.grid
    }

    /// Feature vector length: one 256-bin block per grid cell.
    pub fn feature_length(&self) -> usize {
        self.grid.0 as usize * self.grid.1 as usize * HISTOGRAM_BINS
    }
}

impl Default for LbpParams {
    fn default() -> Self {
        LbpParams { grid: (1, 1) }
    }
}

/// LBP codes over the interior of a ROI; dimensions are input minus the
/// 1-pixel border.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpCodeMap {
    width: u32,
    height: u32,
    codes: Vec<u8>,
}

impl LbpCodeMap {
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// Per-block 256-bin counts, blocks concatenated row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpHistogram {
    grid: (u32, u32),
    bins: Vec<u64>,
}

impl LbpHistogram {
    pub fn grid(&self) -> (u32, u32) {
        self.grid
    }
    pub fn bins(&self) -> &[u64] {
        &self.bins
    }
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

/// Per-block L1-normalized histogram; each 256-bin block sums to 1
/// (or is all zero when its block had no pixels).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    grid: (u32, u32),
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn grid(&self) -> (u32, u32) {
        self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exact bit equality, the form the parallel/serial contract is
    /// stated in.
    pub fn bits_eq(&self, other: &FeatureVector) -> bool {
        self.grid == other.grid
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Extraction engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Serial,
    Parallel { workers: usize },
}

// Neighbor offsets (dx, dy) and their weights, clockwise from top-left.
const NEIGHBORS: [(i32, i32, u32); 8] = [
    (-1, -1, 1),
    (0, -1, 2),
    (1, -1, 4),
    (1, 0, 8),
    (1, 1, 16),
    (0, 1, 32),
    (-1, 1, 64),
    (-1, 0, 128),
];

/// LBP code of a 3x3 window, `window[row][col]` with the center at
/// `window[1][1]`. A neighbor equal to the center counts as 1.
pub fn lbp_code<T: Copy + Ord>(window: &[[T; 3]; 3]) -> u8 {
    let center = window[1][1];
    let mut code = 0u32;
    for &(dx, dy, weight) in &NEIGHBORS {
        let sample = window[(1 + dy) as usize][(1 + dx) as usize];
        if sample >= center {
            code += weight;
        }
    }
    code as u8
}

#[inline]
fn code_at<R: Raster>(roi: &R, samples: &[R::Sample], cx: usize, cy: usize) -> u8 {
    let w = roi.width() as usize;
    let center = samples[cy * w + cx];
    let mut code = 0u32;
    for &(dx, dy, weight) in &NEIGHBORS {
        let sx = (cx as i32 + dx) as usize;
        let sy = (cy as i32 + dy) as usize;
        if samples[sy * w + sx] >= center {
            code += weight;
        }
    }
    code as u8
}

/// Codes at every interior pixel of the ROI.
pub fn lbp_map<R: Raster>(roi: &R) -> Result<LbpCodeMap, FeatureError> {
    if roi.width() < 3 || roi.height() < 3 {
        return Err(FeatureError::RoiTooSmall {
            width: roi.width(),
            height: roi.height(),
        });
    }
    let (mw, mh) = (roi.width() - 2, roi.height() - 2);
    let samples = roi.samples();
    let mut codes = Vec::with_capacity(mw as usize * mh as usize);
    for my in 0..mh as usize {
        for mx in 0..mw as usize {
            codes.push(code_at(roi, samples, mx + 1, my + 1));
        }
    }
    Ok(LbpCodeMap {
        width: mw,
        height: mh,
        codes,
    })
}

/// Index LUT mapping a coordinate to its grid block: block `b` spans
/// `[floor(b*dim/k), floor((b+1)*dim/k))`.
fn block_lut(dim: u32, k: u32) -> Vec<u32> {
    let mut lut = vec![0u32; dim as usize];
    for b in 0..k {
        let start = (b as u64 * dim as u64 / k as u64) as usize;
        let end = ((b as u64 + 1) * dim as u64 / k as u64) as usize;
        lut[start..end].fill(b);
    }
    lut
}

/// Block-partitioned 256-bin histogram of a code map.
#[allow(clippy::needless_range_loop)]
pub fn histogram(map: &LbpCodeMap, grid: (u32, u32)) -> Result<LbpHistogram, FeatureError> {
    let (kx, ky) = grid;
    if kx == 0 || ky == 0 {
        return Err(FeatureError::InvalidGrid { kx, ky });
    }
    if kx > map.width || ky > map.height {
        return Err(FeatureError::GridTooLarge {
            kx,
            ky,
            width: map.width,
            height: map.height,
        });
    }
    let col_block = block_lut(map.width, kx);
    let row_block = block_lut(map.height, ky);
    let mut bins = vec![0u64; kx as usize * ky as usize * HISTOGRAM_BINS];
    for my in 0..map.height as usize {
        let block_row = row_block[my] as usize * kx as usize;
        let row = my * map.width as usize;
        for mx in 0..map.width as usize {
            let block = block_row + col_block[mx] as usize;
            bins[block * HISTOGRAM_BINS + map.codes[row + mx] as usize] += 1;
        }
    }
    Ok(LbpHistogram { grid, bins })
}

/// L1-normalizes each 256-bin block independently; an empty block maps
/// to all zeros.
pub fn normalize(h: &LbpHistogram) -> FeatureVector {
    let mut values = Vec::with_capacity(h.bins.len());
    for block in h.bins.chunks_exact(HISTOGRAM_BINS) {
        let total: u64 = block.iter().sum();
        if total == 0 {
            values.extend(std::iter::repeat_n(0.0, HISTOGRAM_BINS));
        } else {
            let t = total as f64;
            values.extend(block.iter().map(|&c| c as f64 / t));
        }
    }
    FeatureVector {
        grid: h.grid,
        values,
    }
}

/// Full feature extraction: codes, block histogram, normalization.
///
/// The parallel engine splits interior rows into contiguous bands, one
/// private count array per band, and merges counts by integer addition,
/// so the result is bit-identical to the serial engine for every worker
/// count.
pub fn extract<R>(
    roi: &R,
    params: &LbpParams,
    engine: Engine,
) -> Result<FeatureVector, FeatureError>
where
    R: Raster + Sync,
    R::Sample: Send + Sync,
{
    match engine {
        Engine::Serial => {
            let map = lbp_map(roi)?;
            let hist = histogram(&map, params.grid)?;
            Ok(normalize(&hist))
        }
        Engine::Parallel { workers } => {
            if workers == 0 {
                return Err(FeatureError::InvalidWorkerCount);
            }
            let hist = parallel_histogram(roi, params, workers)?;
            Ok(normalize(&hist))
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn parallel_histogram<R>(
    roi: &R,
    params: &LbpParams,
    workers: usize,
) -> Result<LbpHistogram, FeatureError>
where
    R: Raster + Sync,
    R::Sample: Send + Sync,
{
    if roi.width() < 3 || roi.height() < 3 {
        return Err(FeatureError::RoiTooSmall {
            width: roi.width(),
            height: roi.height(),
        });
    }
    let (kx, ky) = params.grid;
    let (mw, mh) = (roi.width() - 2, roi.height() - 2);
    if kx > mw || ky > mh {
        return Err(FeatureError::GridTooLarge {
            kx,
            ky,
            width: mw,
            height: mh,
        });
    }
    let col_block = block_lut(mw, kx);
    let row_block = block_lut(mh, ky);
    let bin_count = params.feature_length();
    let bands = workers.min(mh as usize);
    let samples = roi.samples();

    let partials: Vec<Vec<u64>> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(bands);
        for band in 0..bands {
            let row_start = band * mh as usize / bands;
            let row_end = (band + 1) * mh as usize / bands;
            let col_block = &col_block;
            let row_block = &row_block;
            handles.push(scope.spawn(move || {
                let mut counts = vec![0u64; bin_count];
                for my in row_start..row_end {
                    let block_row = row_block[my] as usize * kx as usize;
                    for mx in 0..mw as usize {
                        let code = code_at(roi, samples, mx + 1, my + 1);
                        let block = block_row + col_block[mx] as usize;
                        counts[block * HISTOGRAM_BINS + code as usize] += 1;
                    }
                }
                counts
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut bins = vec![0u64; bin_count];
    for partial in partials {
        for (acc, v) in bins.iter_mut().zip(partial) {
            *acc += v;
        }
    }
    Ok(LbpHistogram {
        grid: params.grid,
        bins,
    })
}

// --- benchmark harness ---

/// One benchmark measurement row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: u32,
    pub engine: String,
    pub workers: usize,
    pub median_ms: f64,
    pub speedup_vs_serial: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,engine,workers,median_ms,speedup_vs_serial\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.3}\n",
                r.size, r.engine, r.workers, r.median_ms, r.speedup_vs_serial
            ));
        }
        out
    }
}

/// Times serial and parallel extraction over seeded random square ROIs.
/// Before any timing is reported for an input, every parallel result is
/// checked bit-identical to serial; a mismatch aborts the whole run.
pub fn bench_extract(
    sizes: &[u32],
    repetitions: usize,
    worker_counts: &[usize],
) -> Result<BenchReport, FeatureError> {
    bench_extract_with(extract::<GrayFrame>, sizes, repetitions, worker_counts)
}

/// Benchmark with an injectable extraction function, so the equivalence
/// gate itself is testable against a faulty engine.
fn bench_extract_with<F>(
    extract_fn: F,
    sizes: &[u32],
    repetitions: usize,
    worker_counts: &[usize],
) -> Result<BenchReport, FeatureError>
where
    F: Fn(&GrayFrame, &LbpParams, Engine) -> Result<FeatureVector, FeatureError>,
{
    if repetitions < 3 {
        return Err(FeatureError::TooFewRepetitions(repetitions));
    }
    let params = LbpParams::default();
    let mut report = BenchReport::default();
    for &size in sizes {
        let roi = seeded_roi(size, 0x5eed ^ size as u64);

        // equivalence gate first, timings second
        let reference = extract_fn(&roi, &params, Engine::Serial)?;
        for &workers in worker_counts {
            let parallel = extract_fn(&roi, &params, Engine::Parallel { workers })?;
            if !parallel.bits_eq(&reference) {
                return Err(FeatureError::EquivalenceGate { size, workers });
            }
        }

        let serial_ms = median_ms(repetitions, || {
            extract_fn(&roi, &params, Engine::Serial).map(|_| ())
        })?;
        report.rows.push(BenchRow {
            size,
            engine: "serial".into(),
            workers: 1,
            median_ms: serial_ms,
            speedup_vs_serial: 1.0,
        });
        for &workers in worker_counts {
            let par_ms = median_ms(repetitions, || {
                extract_fn(&roi, &params, Engine::Parallel { workers }).map(|_| ())
            })?;
            report.rows.push(BenchRow {
                size,
                engine: "parallel".into(),
                workers,
                median_ms: par_ms,
                speedup_vs_serial: serial_ms / par_ms,
            });
        }
    }
    Ok(report)
}

fn median_ms<F>(repetitions: usize, mut run: F) -> Result<f64, FeatureError>
where
    F: FnMut() -> Result<(), FeatureError>,
{
    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        run()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Ok(if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    })
}

fn seeded_roi(size: u32, seed: u64) -> GrayFrame {
    let mut state = seed;
    let data = (0..size as usize * size as usize)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as u8
        })
        .collect();
    GrayFrame::new(size, size, data).expect("square roi")
}
