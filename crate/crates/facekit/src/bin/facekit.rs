//! Command-line front end: synth, enroll, recognize, evaluate, bench.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal
//! consistency failure (serial/parallel equivalence gate).

use std::fs;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rgbd_facekit::classify;
use rgbd_facekit::features::Engine;
use rgbd_facekit::pipeline::{
    self, Dataset, EnrollmentMode, FeatureSource, PipelineError, RunConfig,
};
use rgbd_facekit::tracking::TrackerConfig;

#[derive(Parser)]
#[command(name = "facekit", version, about = "RGB-D face recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic RGB-D dataset from a scene spec file
    Synth {
        /// Scene spec (plain-text key = value)
        spec: PathBuf,
        /// Output dataset directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Track faces over a dataset and train a recognition model
    Enroll {
        /// Dataset directory
        dataset: PathBuf,
        /// Where to write the trained model
        #[arg(long)]
        model: PathBuf,
        /// Where to write the track event log (JSON lines); stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureOpts,
        #[command(flatten)]
        train: TrainOpts,
        #[command(flatten)]
        mode: ModeOpts,
    },
    /// Label every detection in a dataset with a trained model
    Recognize {
        /// Dataset directory
        dataset: PathBuf,
        /// Trained model path
        #[arg(long)]
        model: PathBuf,
        /// Where to write recognition records (JSON lines); stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureOpts,
    },
    /// Run the 2x2 evaluation matrix (source x enrollment) across datasets
    Evaluate {
        /// Training dataset directory
        train: PathBuf,
        /// Test dataset directory
        test: PathBuf,
        /// Where to write the CSV report; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        features: FeatureOpts,
        #[command(flatten)]
        train_opts: TrainOpts,
    },
    /// Benchmark serial vs parallel feature extraction
    Bench {
        /// Where to write the timing CSV; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Depth,
    Gray,
}

#[derive(Args)]
struct FeatureOpts {
    /// Raster the LBP features are computed from
    #[arg(long, value_enum, default_value = "depth")]
    source: SourceArg,
    /// Face ROI edge length in pixels
    #[arg(long, default_value_t = 200)]
    roi_size: u32,
    /// Histogram grid, e.g. 1x1 or 2x2
    #[arg(long, value_parser = parse_grid, default_value = "1x1")]
    grid: (u32, u32),
    /// Parallel extraction workers; 0 selects the serial engine
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct TrainOpts {
    /// SVM regularization strength
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Training epochs
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Shuffle seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ModeOpts {
    /// Accumulate samples along tracks (default)
    #[arg(long, conflicts_with = "single_frame")]
    tracked: bool,
    /// Use only each identity's first detection
    #[arg(long)]
    single_frame: bool,
}

fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (kx, ky) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected KxK, got {s}"))?;
    let kx: u32 = kx.parse().map_err(|_| format!("bad grid: {s}"))?;
    let ky: u32 = ky.parse().map_err(|_| format!("bad grid: {s}"))?;
    if kx == 0 || ky == 0 {
        return Err("grid dimensions must be at least 1".into());
    }
    Ok((kx, ky))
}

fn build_config(features: &FeatureOpts, train: Option<&TrainOpts>, mode: Option<&ModeOpts>) -> RunConfig {
    let mut cfg = RunConfig {
        source: match features.source {
            SourceArg::Depth => FeatureSource::Depth,
            SourceArg::Gray => FeatureSource::Gray,
        },
        roi_size: features.roi_size,
        grid: features.grid,
        tracker: TrackerConfig::default(),
        engine: if features.workers == 0 {
            Engine::Serial
        } else {
            Engine::Parallel {
                workers: features.workers,
            }
        },
        ..RunConfig::default()
    };
    if let Some(t) = train {
        cfg.train.lambda = t.lambda;
        cfg.train.epochs = t.epochs;
        cfg.train.seed = t.seed;
    }
    if let Some(m) = mode {
        cfg.enrollment = if m.single_frame {
            EnrollmentMode::SingleFrame
        } else {
            EnrollmentMode::Tracked
        };
    }
    cfg
}

fn write_or_stdout(out: &Option<PathBuf>, content: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Synth { spec, out } => {
            pipeline::run_synth(&spec, &out)?;
            eprintln!("dataset written to {}", out.display());
        }
        Command::Enroll {
            dataset,
            model,
            out,
            features,
            train,
            mode,
        } => {
            let cfg = build_config(&features, Some(&train), Some(&mode));
            let ds = Dataset::open(&dataset)?;
            let enrolled = pipeline::run_enroll(&ds, &cfg)?;
            classify::save_model(&enrolled.model, &model)?;
            write_or_stdout(&out, &pipeline::track_log_to_jsonl(&enrolled.track_log))?;
            eprintln!(
                "enrolled {} identities ({}): {}",
                enrolled.samples_per_label.len(),
                cfg.enrollment.as_str(),
                enrolled
                    .samples_per_label
                    .iter()
                    .map(|(l, n)| format!("{l}={n}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        Command::Recognize {
            dataset,
            model,
            out,
            features,
        } => {
            let cfg = build_config(&features, None, None);
            let ds = Dataset::open(&dataset)?;
            let model = classify::load_model(&model)?;
            let records = pipeline::run_recognize(&ds, &model, &cfg)?;
            write_or_stdout(&out, &pipeline::records_to_jsonl(&records))?;
        }
        Command::Evaluate {
            train,
            test,
            out,
            features,
            train_opts,
        } => {
            let cfg = build_config(&features, Some(&train_opts), None);
            let train_ds = Dataset::open(&train)?;
            let test_ds = Dataset::open(&test)?;
            let reports = pipeline::run_evaluate(&train_ds, &test_ds, &cfg)?;
            write_or_stdout(&out, &pipeline::reports_to_csv(&reports))?;
            for r in &reports {
                eprintln!(
                    "{} / {}: accuracy {:.4} ({}/{})",
                    r.source.as_str(),
                    r.enrollment.as_str(),
                    r.accuracy(),
                    r.correct,
                    r.total
                );
                for ((truth, predicted), n) in &r.confusion {
                    eprintln!("  {truth} -> {predicted}: {n}");
                }
            }
        }
        Command::Bench { out } => {
            let report = pipeline::run_bench()?;
            write_or_stdout(&out, &report.to_csv())?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}
