//! `segscore`: evaluation reports, AP-curve export, degradation traces and
//! match inspection.
//!
//! Exit codes: 0 success, 2 invalid input, 3 canvas mismatch, 4 truncated
//! trace (the partial trace is still written).

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use thiserror::Error;

use segscore::eval::{evaluate_comparison, parse_metric_list, EvalError, EvalOptions, Metric};
use segscore::fmt::g12;
use segscore::format::{parse_label_map_pgm, parse_rle_json, write_rle_json, FormatError};
use segscore::metrics::{parse_threshold_range, Comparison, MetricError};
use segscore::simulator::{
    gen_scene, simulate, write_trace_csv, DegradationMode, SimError, SimulationConfig,
};
use segscore::sorted_ap::{sorted_ap_of, write_curve_csv};
use segscore::{Canvas, InstanceSet, Matcher, OverlapError};

use report::{to_canonical_json, Digests, EvalReport, MatchReport};

/// Canvas used by `simulate --synthetic`.
const SYNTHETIC_SIDE: usize = 512;
/// Inclusive object area range used by `simulate --synthetic`.
const SYNTHETIC_AREA: (usize, usize) = (200, 800);
/// Mixed into the seed for synthetic scene generation so that the scene and
/// the degradation draw from different streams.
const SCENE_SEED_SALT: u64 = 0x5EED_5CE7_E000_0001;

#[derive(Parser)]
#[command(name = "segscore", version, about = "Instance segmentation evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Export the AP curve over the IoU threshold domain as CSV.
    Curve(CurveArgs),
    /// Run a degradation protocol and write the score trace as CSV.
    Simulate(SimulateArgs),
    /// Dump the one-to-one matching at a threshold as JSON.
    Match(MatchArgs),
}

#[derive(Args)]
struct Inputs {
    /// Ground truth (.json RLE or .pgm label map).
    #[arg(long)]
    gt: PathBuf,
    /// Predictions (.json RLE or .pgm label map).
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Comma-separated subset of ap,map,pq,sbd,aji,sortedap.
    #[arg(long)]
    metrics: Option<String>,
    /// mAP thresholds as start:stop:step.
    #[arg(long, default_value = "0.5:0.95:0.05")]
    iou_thresholds: String,
    #[arg(long, default_value = "unique")]
    matcher: Matcher,
    /// Where to write the JSON report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    mode: DegradationMode,
    /// Base scene file.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    base: Option<PathBuf>,
    /// Generate a base scene with this many objects.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    /// Per-step pixel removal as a fraction of each object's original area.
    #[arg(long, default_value_t = segscore::simulator::DEFAULT_REMOVAL_FRACTION)]
    fraction: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write every step's scene as RLE JSON into this directory.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    threshold: f64,
    #[arg(long, default_value = "unique")]
    matcher: Matcher,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: unsupported extension (expected .json or .pgm)")]
    Extension { path: PathBuf },
    #[error("{0}")]
    Invalid(String),
    #[error("canvas mismatch: predictions are {pred}, ground truth is {gt}")]
    CanvasMismatch { pred: Canvas, gt: Canvas },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::CanvasMismatch { .. } => 3,
            _ => 2,
        }
    }
}

impl From<OverlapError> for CliError {
    fn from(e: OverlapError) -> Self {
        match e {
            OverlapError::CanvasMismatch { pred, gt } => CliError::CanvasMismatch { pred, gt },
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Overlap(o) => o.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Overlap(o) => o.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

struct Loaded {
    set: InstanceSet,
    digest: String,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let parsed = match ext.as_deref() {
        Some("json") => parse_rle_json(&bytes),
        Some("pgm") => parse_label_map_pgm(&bytes),
        _ => {
            return Err(CliError::Extension {
                path: path.to_path_buf(),
            })
        }
    };
    let set = parsed.map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Loaded {
        set,
        digest: hex::encode(Sha256::digest(&bytes)),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load_pair(inputs: &Inputs) -> Result<(Loaded, Loaded, Comparison), CliError> {
    let gt = load(&inputs.gt)?;
    let pred = load(&inputs.pred)?;
    let cmp = Comparison::new(&pred.set, &gt.set)?;
    Ok((gt, pred, cmp))
}

fn cmd_eval(args: EvalArgs) -> Result<u8, CliError> {
    let metrics = match &args.metrics {
        Some(list) => parse_metric_list(list)?,
        None => Metric::ALL.to_vec(),
    };
    let options = EvalOptions {
        metrics,
        map_thresholds: parse_threshold_range(&args.iou_thresholds)?,
        matcher: args.matcher,
        ..EvalOptions::default()
    };
    let (gt, pred, cmp) = load_pair(&args.inputs)?;
    let scores = evaluate_comparison(&cmp, &options)?;

    let mut stdout = std::io::stdout().lock();
    for (key, value) in scores.named() {
        writeln!(stdout, "{key}={}", g12(value)).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    if let Some(path) = &args.output {
        let report = EvalReport::new(
            &scores,
            options.threshold,
            &options.map_thresholds,
            options.matcher,
            Digests {
                gt: gt.digest,
                pred: pred.digest,
            },
        );
        write_file(path, &to_canonical_json(&report))?;
    }
    Ok(0)
}

fn cmd_curve(args: CurveArgs) -> Result<u8, CliError> {
    let (_, _, cmp) = load_pair(&args.inputs)?;
    let result = sorted_ap_of(&cmp, segscore::sorted_ap::DEFAULT_FUZZ);
    let mut csv = Vec::new();
    write_curve_csv(&result.curve, &mut csv).expect("writing to memory");
    write_file(&args.out, &csv)?;
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, CliError> {
    let base = match (&args.base, args.synthetic) {
        (Some(path), _) => load(path)?.set,
        (None, Some(n)) => {
            let canvas = Canvas::new(SYNTHETIC_SIDE, SYNTHETIC_SIDE).expect("valid canvas");
            gen_scene(canvas, n, SYNTHETIC_AREA, args.seed ^ SCENE_SEED_SALT)?
        }
        (None, None) => unreachable!("clap requires --base or --synthetic"),
    };
    let config = SimulationConfig {
        fraction: args.fraction,
        keep_snapshots: args.snapshot_dir.is_some(),
        ..SimulationConfig::new(args.mode, args.steps, args.seed)
    };
    let trace = simulate(&base, &config)?;
    let mut csv = Vec::new();
    write_trace_csv(&trace, &mut csv).expect("writing to memory");
    write_file(&args.out, &csv)?;
    if let Some(dir) = &args.snapshot_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.clone(),
            source,
        })?;
        for step in &trace.steps {
            let scene = step.scene.as_ref().expect("snapshots requested");
            write_file(
                &dir.join(format!("step{:05}_gt.json", step.step)),
                &write_rle_json(&scene.gt),
            )?;
            write_file(
                &dir.join(format!("step{:05}_pred.json", step.step)),
                &write_rle_json(&scene.pred),
            )?;
        }
    }
    match trace.truncated {
        Some(reason) => {
            eprintln!("segscore: trace truncated: {reason}");
            Ok(4)
        }
        None => Ok(0),
    }
}

fn cmd_match(args: MatchArgs) -> Result<u8, CliError> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::Invalid(format!(
            "threshold {} is outside [0, 1]",
            args.threshold
        )));
    }
    let (gt, pred, cmp) = load_pair(&args.inputs)?;
    let result = cmp.match_at(args.threshold, args.matcher);
    let dump = MatchReport::new(&result, args.matcher, &gt.set, &pred.set);
    std::io::stdout()
        .lock()
        .write_all(&to_canonical_json(&dump))
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(0)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SEGSCORE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        CliError::Invalid(format!(
            "SEGSCORE_THREADS must be a non-negative integer, got \"{raw}\""
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Match(a) => cmd_match(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("segscore: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
