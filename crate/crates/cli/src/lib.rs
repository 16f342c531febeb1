//! The `pinpoint` command line: single-box selection, full pipeline runs,
//! dataset evaluation, ablations, sweeps and synthetic suite generation.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use pinpoint_pipeline::backends::BackendError;
use pinpoint_pipeline::bench::BenchError;
use pinpoint_pipeline::Stage;

pub use config::{BackendKind, ConfigFlags, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Backend(_) => 4,
            CliError::Parse(_) => 5,
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(_) => CliError::Io(e.to_string()),
            BenchError::Backend(_) => CliError::Backend(e.to_string()),
            BenchError::Manifest { .. } => CliError::Parse(e.to_string()),
            BenchError::Unsupported(_)
            | BenchError::EmptyDataset
            | BenchError::Spec(_)
            | BenchError::Invalid(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Config(_) => CliError::Config(e.to_string()),
            BackendError::Parse(_) => CliError::Parse(e.to_string()),
            BackendError::Transport(_) | BackendError::Invalid(_) => {
                CliError::Backend(e.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pinpoint",
    version,
    about = "Cue-fusion point prompts for box-prompted segmentation"
)]
pub struct Cli {
    #[command(flatten)]
    pub flags: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationKind {
    StageWalk,
    CueDropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Confidence threshold x label allowlist grid.
    Filter,
    SigmaG,
    Lambdas,
    Clip,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select points inside one box and print them as JSON.
    Select {
        #[arg(long)]
        image: PathBuf,
        /// Box as `x_min,y_min,x_max,y_max` (inclusive pixels).
        #[arg(long = "box")]
        bbox: String,
    },
    /// Run the full pipeline for one image and query.
    Run {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        query: String,
        /// Target mask PNG for the oracle backends.
        #[arg(long)]
        oracle_mask: Option<PathBuf>,
        /// Ground-truth mask PNG; adds IoU to the record.
        #[arg(long)]
        gt_mask: Option<PathBuf>,
    },
    /// Evaluate one pipeline configuration over a manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "s5")]
        stage: Stage,
    },
    /// Stage walk or per-cue dropout over a manifest.
    Ablate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "stage-walk")]
        kind: AblationKind,
    },
    /// Hyperparameter or filter sweeps over a manifest.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Grid values; pairs as `a:b`. Defaults to the published grid.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<String>,
        /// Allowlists for the filter sweep.
        #[arg(long, value_delimiter = ',')]
        allowlists: Vec<pinpoint_pipeline::Allowlist>,
    },
    /// Write a seeded synthetic suite (images, masks, manifest).
    Generate {
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Suite seed; defaults to the standard suite's.
        #[arg(long)]
        suite_seed: Option<u64>,
        #[arg(long)]
        size: Option<usize>,
    },
}

/// Parses nothing itself; runs an already parsed command line and returns the
/// text destined for stdout.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    commands::dispatch(&cli.command, &cfg)
}
