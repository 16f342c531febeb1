//! Synthetic scenes, dataset I/O, metrics and the ablation and sweep runners.

mod dataset;
mod metrics;
mod output;
pub mod reference;
mod runners;
mod scene;

pub use dataset::{
    load_dataset, read_manifest, write_manifest, write_suite, ManifestEntry, Sample,
};
pub use metrics::{ciou, giou, summarize, EmptyRecords, MetricSummary, Overlap};
pub use output::{write_bytes, write_csv, write_jsonl, write_text};
pub use runners::{
    evaluate, run_ablation_stage_walk, run_cue_dropout, run_filter_sweep, run_sensitivity_sweep,
    BackendProvider, CueDropoutReport, CueRow, CueSetting, EvalRecord, FilterRow,
    FilterSweepReport, OracleProvider, RemoteProvider, SensitivityReport, SensitivityRow, StageRow,
    StageWalkReport, SweepAxis,
};
pub use scene::{generate_scene, generate_suite, Scene, SceneSpec, Shape, SuiteSpec, PALETTE};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid scene spec: {0}")]
    Spec(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<EmptyRecords> for BenchError {
    fn from(_: EmptyRecords) -> Self {
        BenchError::EmptyDataset
    }
}
