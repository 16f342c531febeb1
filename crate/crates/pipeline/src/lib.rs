//! Backends, end-to-end orchestration and a seeded synthetic benchmark for
//! cue-based point selection.

pub mod backends;
pub mod bench;
pub mod pipeline;

pub use pipeline::{
    filter_points, finish, merge_masks, prepare, run_query, run_stage_config, Allowlist, BoxRecord,
    FilterPolicy, LabeledPoint, PipelineConfig, PipelineResult, Prepared, ResultRecord, Stage,
    StageTimings,
};
