//! Command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 at least one stream rejected, 64 usage.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::density::density_distribution;
use crate::error::{Error, Result};
use crate::estimator::{search_bounds, BoundsPolicy, SyncConfig};
use crate::event::SensorGeometry;
use crate::io::{export_density_table, read_events_csv, report_json, write_events_csv};
use crate::sync::synchronize;
use crate::synthgen::{make_profile, sample_streams, GeneratorConfig, ProfileKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "evsync", version, about = "Synchronize event-camera streams by event-density alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate offsets against a reference stream and write adjusted streams.
    Sync(SyncArgs),
    /// Export the normalized event density of one stream.
    Density(DensityArgs),
    /// Generate synthetic streams with known start offsets.
    Gen(GenArgs),
    /// Print the percentile-derived search range for two streams.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundsArg {
    Percentile,
    Overlap,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Bin width in microseconds.
    #[arg(long, default_value_t = 1000)]
    tau_us: u64,
    /// Analysis window length in seconds.
    #[arg(long, default_value_t = 10.0)]
    window_s: f64,
    /// Acceptance threshold on the dissimilarity score.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Percentile used for the search bounds.
    #[arg(long, default_value_t = 50.0)]
    percentile: f64,
    #[arg(long, default_value_t = 6)]
    max_windows: usize,
    #[arg(long, default_value_t = 1000)]
    min_overlap_bins: usize,
    #[arg(long, default_value_t = 500_000)]
    fallback_halfwidth_us: i64,
    /// How the candidate range is chosen.
    #[arg(long, value_enum, default_value_t = BoundsArg::Overlap)]
    bounds: BoundsArg,
}

impl EstimatorArgs {
    fn config(&self) -> std::result::Result<SyncConfig, String> {
        let cfg = SyncConfig {
            tau_us: self.tau_us,
            window_us: seconds_to_us(self.window_s)?,
            epsilon: self.epsilon,
            percentile: self.percentile,
            max_windows: self.max_windows,
            min_overlap_bins: self.min_overlap_bins,
            bound_fallback_halfwidth_us: self.fallback_halfwidth_us,
            bounds_policy: match self.bounds {
                BoundsArg::Percentile => BoundsPolicy::Percentile,
                BoundsArg::Overlap => BoundsPolicy::Overlap,
            },
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SyncArgs {
    /// Reference stream followed by the streams to align with it.
    #[arg(required = true, num_args = 2..)]
    files: Vec<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Index among the input files of the reference stream.
    #[arg(long, default_value_t = 0)]
    reference: usize,
    /// Directory for `<label>.synced.csv` outputs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Report path; printed to standard output when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    tau_us: u64,
    /// Window length in seconds; defaults to the whole stream.
    #[arg(long)]
    window_s: Option<f64>,
    /// Window start in seconds.
    #[arg(long, default_value_t = 0.0)]
    start_s: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    cameras: usize,
    /// World time at which each camera starts, in microseconds.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    offsets_us: Vec<i64>,
    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,
    #[arg(long)]
    seed: u64,
    /// Relative per-bin count jitter.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Per-event timestamp jitter (standard deviation, microseconds).
    #[arg(long, default_value_t = 0.0)]
    jitter_us: f64,
    /// Per-camera sensitivity; all 1.0 when omitted.
    #[arg(long, value_delimiter = ',')]
    gains: Option<Vec<f64>>,
    #[arg(long, default_value = "bursts")]
    profile: ProfileKind,
    #[arg(long, default_value_t = 1000)]
    tau_us: u64,
    /// Events per bin at unit scene activity.
    #[arg(long, default_value_t = 32.0)]
    rate: f64,
    #[arg(long, default_value_t = 346)]
    width: u32,
    #[arg(long, default_value_t = 260)]
    height: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1000)]
    tau_us: u64,
    #[arg(long, default_value_t = 10.0)]
    window_s: f64,
    #[arg(long, default_value_t = 50.0)]
    percentile: f64,
    #[arg(long, default_value_t = 500_000)]
    fallback_halfwidth_us: i64,
}

fn seconds_to_us(s: f64) -> std::result::Result<u64, String> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(format!("duration must be positive, got {s}"));
    }
    Ok((s * 1e6).round() as u64)
}

enum Failure {
    Usage(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Sync(args) => run_sync(args),
        Command::Density(args) => run_density(args).map(|_| EXIT_OK),
        Command::Gen(args) => run_gen(args).map(|_| EXIT_OK),
        Command::Bounds(args) => run_bounds(args).map(|_| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_sync(args: SyncArgs) -> std::result::Result<i32, Failure> {
    let cfg = args.estimator.config().map_err(Failure::Usage)?;
    if args.reference >= args.files.len() {
        return Err(Failure::Usage(format!(
            "--reference {} out of range for {} files",
            args.reference,
            args.files.len()
        )));
    }
    let streams = args
        .files
        .iter()
        .map(read_events_csv)
        .collect::<Result<Vec<_>>>()?;
    let out = synchronize(&streams, args.reference, &cfg)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    for stream in &out.streams {
        write_events_csv(stream, args.out_dir.join(format!("{}.synced.csv", stream.label())))?;
    }
    let json = report_json(&out.report, &out.estimates);
    match &args.report {
        Some(path) => fs::write(path, &json).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => print!("{json}"),
    }
    for entry in &out.report.entries {
        if let Some(err) = &entry.error {
            eprintln!("error: {}: {err}", entry.label);
        } else if !entry.accepted {
            eprintln!(
                "warning: {}: best score {:.3e} not below epsilon {:e}; stream left unadjusted",
                entry.label,
                entry.min_dissimilarity.unwrap_or(f64::NAN),
                cfg.epsilon
            );
        }
    }
    Ok(if out.report.any_failed() {
        EXIT_ERROR
    } else if out.report.all_accepted() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    })
}

fn run_density(args: DensityArgs) -> std::result::Result<(), Failure> {
    if args.tau_us == 0 {
        return Err(Failure::Usage("--tau-us must be positive".into()));
    }
    if !(args.start_s >= 0.0) {
        return Err(Failure::Usage("--start-s must be non-negative".into()));
    }
    let stream = read_events_csv(&args.input)?;
    let start = (args.start_s * 1e6).round() as u64;
    let len = match args.window_s {
        Some(s) => seconds_to_us(s).map_err(Failure::Usage)?,
        None => {
            // Whole stream from `start`, rounded up to whole bins.
            let end = stream.last_timestamp().map_or(start, |t| t + 1).max(start + 1);
            (end - start).div_ceil(args.tau_us) * args.tau_us
        }
    };
    if len % args.tau_us != 0 {
        return Err(Failure::Usage(format!(
            "window of {len} us is not a multiple of --tau-us {}",
            args.tau_us
        )));
    }
    let dist = density_distribution(&stream, start, len, args.tau_us)?;
    export_density_table(&dist, &args.output)?;
    Ok(())
}

#[derive(Serialize)]
struct GroundTruthCamera {
    label: String,
    file: String,
    start_offset_us: i64,
    gain: f64,
    delta_vs_reference_us: i64,
    events: usize,
}

#[derive(Serialize)]
struct GroundTruth {
    seed: u64,
    profile: ProfileKind,
    duration_us: u64,
    tau_us: u64,
    count_noise: f64,
    timestamp_jitter_us: f64,
    reference: String,
    cameras: Vec<GroundTruthCamera>,
}

fn run_gen(args: GenArgs) -> std::result::Result<(), Failure> {
    if args.cameras == 0 {
        return Err(Failure::Usage("--cameras must be at least 1".into()));
    }
    if args.offsets_us.len() != args.cameras {
        return Err(Failure::Usage(format!(
            "--offsets-us has {} values for {} cameras",
            args.offsets_us.len(),
            args.cameras
        )));
    }
    let gains = args.gains.clone().unwrap_or_else(|| vec![1.0; args.cameras]);
    if gains.len() != args.cameras {
        return Err(Failure::Usage(format!(
            "--gains has {} values for {} cameras",
            gains.len(),
            args.cameras
        )));
    }
    if !(args.rate > 0.0) {
        return Err(Failure::Usage("--rate must be positive".into()));
    }
    let duration = seconds_to_us(args.duration_s).map_err(Failure::Usage)?;
    let geometry = SensorGeometry::new(args.width, args.height)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let cfg = GeneratorConfig {
        contrast_threshold: 1.0 / args.rate,
        geometry,
        offsets: args.offsets_us.clone(),
        count_noise: args.noise,
        timestamp_jitter_us: args.jitter_us,
        gains: gains.clone(),
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let profile = match make_profile(args.seed, duration, args.tau_us, args.profile) {
        Ok(p) => p,
        Err(e @ Error::InvalidDuration { .. }) => return Err(Failure::Usage(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let generated = sample_streams(&profile, &cfg)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    let mut cameras = Vec::new();
    for (j, stream) in generated.streams.iter().enumerate() {
        let file = format!("{}.csv", stream.label());
        write_events_csv(stream, args.out_dir.join(&file))?;
        cameras.push(GroundTruthCamera {
            label: stream.label().to_owned(),
            file,
            start_offset_us: generated.offsets[j],
            gain: gains[j],
            delta_vs_reference_us: generated.true_delta(0, j),
            events: stream.len(),
        });
    }
    let truth = GroundTruth {
        seed: args.seed,
        profile: args.profile,
        duration_us: duration,
        tau_us: args.tau_us,
        count_noise: args.noise,
        timestamp_jitter_us: args.jitter_us,
        reference: generated.streams[0].label().to_owned(),
        cameras,
    };
    let path = args.out_dir.join("ground_truth.json");
    let mut json = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
    json.push('\n');
    write_file(&path, &json)?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn run_bounds(args: BoundsArgs) -> std::result::Result<(), Failure> {
    let window = seconds_to_us(args.window_s).map_err(Failure::Usage)?;
    if args.tau_us == 0 || window % args.tau_us != 0 {
        return Err(Failure::Usage(format!(
            "--window-s must be a positive multiple of --tau-us {}",
            args.tau_us
        )));
    }
    if !(args.percentile > 0.0 && args.percentile < 100.0) {
        return Err(Failure::Usage("--percentile must lie in (0, 100)".into()));
    }
    let a = read_events_csv(&args.a)?;
    let b = read_events_csv(&args.b)?;
    let m1 = density_distribution(&a, 0, window, args.tau_us)?;
    let m2 = density_distribution(&b, 0, window, args.tau_us)?;
    let q1 = m1.percentile_timestamp(args.percentile)?;
    let q2 = m2.percentile_timestamp(args.percentile)?;
    let bounds = search_bounds(&m1, &m2, args.percentile, args.fallback_halfwidth_us)?;
    println!("q1_us={q1}");
    println!("q2_us={q2}");
    println!("a_us={}", bounds.a);
    println!("b_us={}", bounds.b);
    Ok(())
}
