mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Gendered on-screen presence measurement from face-detection records.
#[derive(Debug, Parser)]
#[command(name = "onscreen", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the frame sampling plan for every movie in the manifest.
    Plan,
    /// Run the frame decoder for every planned frame and verify the output.
    Extract,
    /// Feed extracted frames to an external detector and collect its records.
    Detect,
    /// Validate detection records and store them sorted, one file per movie.
    Ingest,
    /// Draw the human-review task set from ingested detections.
    CalibrateSample,
    /// Serve review tasks over HTTP.
    CalibrateServe,
    /// Turn a review export into confusion matrices and correction factors.
    CalibrateCompute,
    /// Compute all metrics into analysis/analysis.json.
    Analyze,
    /// Render report files from analysis/analysis.json.
    Report,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Opts {
    /// Flat key = value file mirroring these flags; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Movie manifest (CSV or JSON lines).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Detection records: a file or a directory of .jsonl files.
    #[arg(long, global = true)]
    pub detections: Option<PathBuf>,
    /// Correction factors produced by calibrate-compute.
    #[arg(long, global = true)]
    pub factors: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 4)]
    pub periods: usize,
    /// Frame sampling interval in seconds.
    #[arg(long = "interval-s", global = true, default_value_t = onscreen_core::sampling::DEFAULT_INTERVAL_S)]
    pub interval_s: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Analyze with raw labels instead of corrected ones.
    #[arg(long, global = true)]
    pub uncorrected: bool,

    #[arg(long = "year-lo", global = true, default_value_t = 1985)]
    pub year_lo: i32,
    #[arg(long = "year-hi", global = true, default_value_t = 2019)]
    pub year_hi: i32,
    /// Minimum seeders; movies with unknown seeders are kept.
    #[arg(long = "min-seeders", global = true, default_value_t = 3)]
    pub min_seeders: u64,
    /// Skip the corpus filter and use the manifest as is.
    #[arg(long = "no-filter", global = true)]
    pub no_filter: bool,

    /// Directory of frame images (default: <out>/frames).
    #[arg(long, global = true)]
    pub frames: Option<PathBuf>,
    /// Directory of input videos, named <movie_id>.<video-ext>.
    #[arg(long, global = true)]
    pub videos: Option<PathBuf>,
    #[arg(long = "video-ext", global = true, default_value = "mp4")]
    pub video_ext: String,
    /// Decoder command with {input}, {timestamp} and {output} placeholders.
    #[arg(long, global = true)]
    pub template: Option<String>,
    /// Print extraction commands instead of running them.
    #[arg(long = "dry-run", global = true)]
    pub dry_run: bool,
    /// Detector command line; receives frame paths on stdin.
    #[arg(long, global = true)]
    pub detector: Option<String>,

    /// Number of review tasks to sample.
    #[arg(long = "task-count", global = true, default_value_t = onscreen_core::calibration::DEFAULT_TASK_COUNT)]
    pub task_count: usize,
    /// Review task set (default: <out>/calibration/tasks.jsonl).
    #[arg(long, global = true)]
    pub tasks: Option<PathBuf>,
    /// Review log (default: <out>/calibration/reviews.jsonl).
    #[arg(long = "review-log", global = true)]
    pub review_log: Option<PathBuf>,
    /// Review export CSV (from GET /api/export).
    #[arg(long, global = true)]
    pub export: Option<PathBuf>,
    #[arg(long = "min-tasks", global = true, default_value_t = onscreen_core::calibration::DEFAULT_MIN_TASKS_PER_PERIOD)]
    pub min_tasks: usize,
    #[arg(long, global = true, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Static files for the review UI.
    #[arg(long = "static-dir", global = true)]
    pub static_dir: Option<PathBuf>,

    /// Bechdel score cache (JSON lines); enables enrichment in analyze.
    #[arg(long = "bechdel-cache", global = true)]
    pub bechdel_cache: Option<PathBuf>,
    /// Bechdel API base URL; without it only the cache is used.
    #[arg(long = "bechdel-url", global = true)]
    pub bechdel_url: Option<String>,
    /// Analysis output to render (default: <out>/analysis/analysis.json).
    #[arg(long, global = true)]
    pub analysis: Option<PathBuf>,
}

fn parse_args(raw: Vec<OsString>) -> Result<Cli, clap::Error> {
    let args = match config::config_path(&raw) {
        Some(path) => match config::load(&path) {
            Ok(entries) => config::merge(raw, &entries),
            Err(e) => {
                return Err(clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e:#}\n")));
            }
        },
        None => raw,
    };
    Cli::try_parse_from(args)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli.command, &cli.opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
