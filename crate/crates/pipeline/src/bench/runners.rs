//! Dataset evaluation and the ablation and sweep protocols.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pinpoint_core::{FusionMode, FusionWeights};

use super::metrics::{summarize, MetricSummary, Overlap};
use super::reference;
use super::{BenchError, Sample};
use crate::backends::{
    derive_seed, mix64, BackendError, BackendSet, Backends, LabelerNoise, OracleWorld, PseudoSam,
    RemoteConfig, RemoteLabeler, RemoteLocalizer, RemoteSegmenter,
};
use crate::pipeline::{
    finish, prepare, run_query, run_stage_config, Allowlist, FilterPolicy, PipelineConfig,
    PipelineResult, Stage, StageTimings,
};

/// Builds the backends used for one sample.
pub trait BackendProvider: Sync {
    fn backends(&self, sample: &Sample) -> Result<BackendSet, BackendError>;
}

/// Ground-truth oracles plus the region-growing segmenter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleProvider {
    pub noise: LabelerNoise,
    pub jitter: f64,
    pub seed: u64,
    pub max_delta_e: f64,
}

impl Default for OracleProvider {
    fn default() -> Self {
        Self {
            noise: LabelerNoise::default(),
            jitter: 0.08,
            seed: 7,
            max_delta_e: crate::backends::DEFAULT_DELTA_E,
        }
    }
}

fn hash_id(id: &str) -> u64 {
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| mix64(h ^ b as u64))
}

impl OracleProvider {
    pub fn world(&self, sample: &Sample) -> OracleWorld {
        OracleWorld {
            target: Arc::new(sample.gt.clone()),
            distractors: sample.distractors.iter().cloned().map(Arc::new).collect(),
            noise: self.noise,
            jitter: self.jitter,
            seed: derive_seed(self.seed, &[hash_id(&sample.id) as i64]),
        }
    }
}

impl BackendProvider for OracleProvider {
    fn backends(&self, sample: &Sample) -> Result<BackendSet, BackendError> {
        let w = self.world(sample);
        Ok(BackendSet {
            localizer: Box::new(w.localizer()),
            labeler: Box::new(w.labeler()),
            segmenter: Box::new(PseudoSam::new(self.max_delta_e)),
        })
    }
}

/// Remote generation and segmentation servers.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    localizer: RemoteLocalizer,
    labeler: RemoteLabeler,
    segmenter: RemoteSegmenter,
}

impl RemoteProvider {
    pub fn new(vlm: RemoteConfig, sam: RemoteConfig) -> Result<Self, BackendError> {
        Ok(Self {
            localizer: RemoteLocalizer::new(vlm.clone())?,
            labeler: RemoteLabeler::new(vlm)?,
            segmenter: RemoteSegmenter::new(sam)?,
        })
    }
}

impl BackendProvider for RemoteProvider {
    fn backends(&self, _sample: &Sample) -> Result<BackendSet, BackendError> {
        Ok(BackendSet {
            localizer: Box::new(self.localizer.clone()),
            labeler: Box::new(self.labeler.clone()),
            segmenter: Box::new(self.segmenter.clone()),
        })
    }
}

/// Per-sample outcome of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub config: String,
    pub iou: f64,
    pub intersection: u64,
    pub union: u64,
    pub timings: StageTimings,
    pub boxes: usize,
    pub labeled: usize,
    pub kept: usize,
    pub filtered_fraction: f64,
    pub box_only_boxes: usize,
    pub model_calls: usize,
    pub errors: Vec<String>,
}

impl EvalRecord {
    pub fn overlap(&self) -> Overlap {
        Overlap {
            intersection: self.intersection,
            union: self.union,
        }
    }

    fn from_result(sample: &Sample, config: &str, r: &PipelineResult) -> Self {
        let o = Overlap::of(&r.mask, &sample.gt).unwrap_or(Overlap {
            intersection: 0,
            union: sample.gt.count() as u64,
        });
        let (labeled, kept) = (r.labeled_count(), r.kept_count());
        let mut errors: Vec<String> = r.localization_error.iter().cloned().collect();
        errors.extend(r.boxes.iter().flat_map(|b| b.errors.iter().cloned()));
        Self {
            id: sample.id.clone(),
            config: config.to_string(),
            iou: o.iou(),
            intersection: o.intersection,
            union: o.union,
            timings: r.timings,
            boxes: r.boxes.len(),
            labeled,
            kept,
            filtered_fraction: if labeled == 0 {
                0.0
            } else {
                1.0 - kept as f64 / labeled as f64
            },
            box_only_boxes: r.boxes.iter().filter(|b| b.box_only).count(),
            model_calls: r.model_calls,
            errors,
        }
    }

    fn failed(sample: &Sample, config: &str, e: &BackendError) -> Self {
        Self {
            id: sample.id.clone(),
            config: config.to_string(),
            iou: 0.0,
            intersection: 0,
            union: sample.gt.count() as u64,
            timings: StageTimings::default(),
            boxes: 0,
            labeled: 0,
            kept: 0,
            filtered_fraction: 0.0,
            box_only_boxes: 0,
            model_calls: 0,
            errors: vec![e.to_string()],
        }
    }
}

fn in_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, BenchError> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs `f` on every sample in parallel (`jobs == 0` uses the global pool);
/// records come back in dataset order.
pub fn evaluate<F>(
    dataset: &[Sample],
    provider: &dyn BackendProvider,
    jobs: usize,
    config: &str,
    f: F,
) -> Result<Vec<EvalRecord>, BenchError>
where
    F: Fn(&Sample, Backends<'_>) -> PipelineResult + Sync,
{
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    in_pool(jobs, || {
        dataset
            .par_iter()
            .map(|s| match provider.backends(s) {
                Ok(set) => EvalRecord::from_result(s, config, &f(s, set.view())),
                Err(e) => EvalRecord::failed(s, config, &e),
            })
            .collect()
    })
}

fn summary_of(records: &[EvalRecord]) -> Result<MetricSummary, BenchError> {
    let o: Vec<Overlap> = records.iter().map(EvalRecord::overlap).collect();
    Ok(summarize(&o)?)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: Stage,
    pub description: String,
    pub summary: MetricSummary,
    /// cIoU change vs the previous stage.
    pub delta_prev: Option<f64>,
    /// Published cIoU (percent).
    pub reference_ciou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageWalkReport {
    pub rows: Vec<StageRow>,
    pub records: Vec<EvalRecord>,
}

impl StageWalkReport {
    pub fn ciou(&self, stage: Stage) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.stage == stage)
            .map(|r| r.summary.ciou)
    }

    pub const HEADER: [&'static str; 7] = [
        "stage",
        "description",
        "ciou",
        "giou",
        "delta_prev",
        "reference_ciou",
        "reference_tag",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.stage.to_string(),
                    r.description.clone(),
                    pct(r.summary.ciou),
                    pct(r.summary.giou),
                    r.delta_prev.map(pct).unwrap_or_default(),
                    opt(r.reference_ciou, 1),
                    reference::REFERENCE_TAG.to_string(),
                ]
            })
            .collect()
    }
}

/// Evaluates the five progressive configurations.
pub fn run_ablation_stage_walk(
    dataset: &[Sample],
    cfg: &PipelineConfig,
    provider: &dyn BackendProvider,
    jobs: usize,
) -> Result<StageWalkReport, BenchError> {
    let mut rows: Vec<StageRow> = Vec::new();
    let mut records = Vec::new();
    for stage in Stage::ALL {
        let recs = evaluate(dataset, provider, jobs, stage.as_str(), |s, b| {
            run_stage_config(&s.image, &s.query, stage, cfg, b)
        })?;
        let summary = summary_of(&recs)?;
        rows.push(StageRow {
            stage,
            description: stage.description().to_string(),
            summary,
            delta_prev: rows.last().map(|p| summary.ciou - p.summary.ciou),
            reference_ciou: reference::stage_walk(stage.as_str()),
        });
        records.extend(recs);
    }
    Ok(StageWalkReport { rows, records })
}

/// One-cue-off settings of the diagnostic fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CueSetting {
    #[serde(rename = "all-on")]
    AllOn,
    #[serde(rename = "no_E")]
    NoE,
    #[serde(rename = "no_G")]
    NoG,
    #[serde(rename = "no_H")]
    NoH,
    #[serde(rename = "no_S")]
    NoS,
}

impl CueSetting {
    pub const SUPPORTED: [CueSetting; 4] = [
        CueSetting::AllOn,
        CueSetting::NoE,
        CueSetting::NoG,
        CueSetting::NoH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CueSetting::AllOn => "all-on",
            CueSetting::NoE => "no_E",
            CueSetting::NoG => "no_G",
            CueSetting::NoH => "no_H",
            CueSetting::NoS => "no_S",
        }
    }

    pub fn removed(self) -> &'static str {
        match self {
            CueSetting::AllOn => "-",
            CueSetting::NoE => "edge density (lambda_E = 0)",
            CueSetting::NoG => "Gaussian prior (sigma_G -> inf)",
            CueSetting::NoH => "local entropy (lambda_H = 0)",
            CueSetting::NoS => "saliency",
        }
    }

    /// The diagnostic configuration for this setting.
    pub fn apply(self, cfg: &PipelineConfig) -> Result<PipelineConfig, BenchError> {
        let mut c = *cfg;
        c.pinpoint.fusion = FusionMode::LinearDiagnostic;
        c.pinpoint.weights = FusionWeights::UNIT;
        match self {
            CueSetting::AllOn => {}
            CueSetting::NoE => c.pinpoint.weights.lambda_e = 0.0,
            CueSetting::NoH => c.pinpoint.weights.lambda_h = 0.0,
            CueSetting::NoG => c.pinpoint.cues.sigma_g = f64::INFINITY,
            CueSetting::NoS => {
                return Err(BenchError::Unsupported(
                    "no_S has no off-switch: saliency is the multiplicative base of the diagnostic fusion".into(),
                ))
            }
        }
        Ok(c)
    }
}

impl std::str::FromStr for CueSetting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            CueSetting::AllOn,
            CueSetting::NoE,
            CueSetting::NoG,
            CueSetting::NoH,
            CueSetting::NoS,
        ]
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| format!("unknown cue setting `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueRow {
    pub setting: CueSetting,
    pub removed: String,
    pub summary: MetricSummary,
    pub delta: f64,
    pub reference_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueDropoutReport {
    pub rows: Vec<CueRow>,
    pub records: Vec<EvalRecord>,
}

impl CueDropoutReport {
    pub const HEADER: [&'static str; 7] = [
        "setting",
        "cue_removed",
        "ciou",
        "giou",
        "delta_ciou",
        "reference_delta",
        "reference_tag",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.setting.name().to_string(),
                    r.removed.clone(),
                    pct(r.summary.ciou),
                    pct(r.summary.giou),
                    pct(r.delta),
                    opt(r.reference_delta, 1),
                    reference::REFERENCE_TAG.to_string(),
                ]
            })
            .collect()
    }
}

/// Per-cue dropout under the unit-weight diagnostic fusion. Requesting
/// `no_S` is an error; deltas are relative to the all-on row.
pub fn run_cue_dropout(
    dataset: &[Sample],
    cfg: &PipelineConfig,
    provider: &dyn BackendProvider,
    settings: &[CueSetting],
    jobs: usize,
) -> Result<CueDropoutReport, BenchError> {
    let configs: Vec<(CueSetting, PipelineConfig)> = settings
        .iter()
        .map(|&s| s.apply(cfg).map(|c| (s, c)))
        .collect::<Result<_, _>>()?;
    let base_cfg = CueSetting::AllOn.apply(cfg)?;
    let base_recs = evaluate(dataset, provider, jobs, "all-on", |s, b| {
        run_query(&s.image, &s.query, &base_cfg, b)
    })?;
    let base = summary_of(&base_recs)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (setting, c) in configs {
        let recs = if setting == CueSetting::AllOn {
            base_recs.clone()
        } else {
            evaluate(dataset, provider, jobs, setting.name(), |s, b| {
                run_query(&s.image, &s.query, &c, b)
            })?
        };
        let summary = summary_of(&recs)?;
        rows.push(CueRow {
            setting,
            removed: setting.removed().to_string(),
            summary,
            delta: if setting == CueSetting::AllOn {
                0.0
            } else {
                summary.ciou - base.ciou
            },
            reference_delta: reference::cue_delta(setting.name()),
        });
        records.extend(recs);
    }
    Ok(CueDropoutReport { rows, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub tau: f64,
    pub allowlist: Allowlist,
    pub summary: MetricSummary,
    /// Fraction of labeled points discarded.
    pub filtered_fraction: f64,
    /// Mean points passed to the segmenter per box.
    pub mean_kept: f64,
    pub labeled: usize,
    pub kept: usize,
    pub reference_ciou: Option<f64>,
    pub reference_filtered_pct: Option<f64>,
    pub reference_mean_kept: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSweepReport {
    pub rows: Vec<FilterRow>,
    pub records: Vec<EvalRecord>,
}

impl FilterSweepReport {
    pub fn row(&self, tau: f64, allow: Allowlist) -> Option<&FilterRow> {
        self.rows
            .iter()
            .find(|r| (r.tau - tau).abs() < 1e-12 && r.allowlist == allow)
    }

    pub const HEADER: [&'static str; 10] = [
        "tau",
        "allowlist",
        "ciou",
        "giou",
        "filtered_pct",
        "mean_kept",
        "reference_ciou",
        "reference_filtered_pct",
        "reference_mean_kept",
        "reference_tag",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    format!("{}", r.tau),
                    r.allowlist.to_string(),
                    pct(r.summary.ciou),
                    pct(r.summary.giou),
                    pct(r.filtered_fraction),
                    format!("{:.2}", r.mean_kept),
                    opt(r.reference_ciou, 1),
                    opt(r.reference_filtered_pct, 1),
                    opt(r.reference_mean_kept, 2),
                    reference::REFERENCE_TAG.to_string(),
                ]
            })
            .collect()
    }
}

/// Full tau x allowlist grid. Labels are computed once per sample; only
/// filtering and segmentation are repeated per grid point.
pub fn run_filter_sweep(
    dataset: &[Sample],
    cfg: &PipelineConfig,
    provider: &dyn BackendProvider,
    taus: &[f64],
    allowlists: &[Allowlist],
    jobs: usize,
) -> Result<FilterSweepReport, BenchError> {
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(BenchError::Invalid(format!("tau {t} outside [0, 1]")));
    }
    let grid: Vec<FilterPolicy> = taus
        .iter()
        .flat_map(|&tau| {
            allowlists
                .iter()
                .map(move |&allowlist| FilterPolicy { tau, allowlist })
        })
        .collect();
    let per_sample: Vec<Vec<EvalRecord>> = in_pool(jobs, || {
        dataset
            .par_iter()
            .map(|s| {
                let ids: Vec<String> = grid
                    .iter()
                    .map(|p| format!("tau={},allow={}", p.tau, p.allowlist))
                    .collect();
                match provider.backends(s) {
                    Ok(set) => {
                        let b = set.view();
                        let prepared = prepare(&s.image, &s.query, cfg, Stage::S5, b);
                        grid.iter()
                            .zip(&ids)
                            .map(|(p, id)| {
                                EvalRecord::from_result(
                                    s,
                                    id,
                                    &finish(&s.image, &prepared, Some(*p), b),
                                )
                            })
                            .collect()
                    }
                    Err(e) => ids.iter().map(|id| EvalRecord::failed(s, id, &e)).collect(),
                }
            })
            .collect()
    })?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut records = Vec::new();
    for (g, p) in grid.iter().enumerate() {
        let recs: Vec<EvalRecord> = per_sample.iter().map(|v| v[g].clone()).collect();
        let summary = summary_of(&recs)?;
        let labeled: usize = recs.iter().map(|r| r.labeled).sum();
        let kept: usize = recs.iter().map(|r| r.kept).sum();
        let boxes: usize = recs.iter().map(|r| r.boxes).sum();
        let both = if p.allowlist == Allowlist::Both {
            reference::tau_both(p.tau)
        } else {
            None
        };
        let al = reference::allowlist(p.tau, p.allowlist.as_str());
        rows.push(FilterRow {
            tau: p.tau,
            allowlist: p.allowlist,
            summary,
            filtered_fraction: if labeled == 0 {
                0.0
            } else {
                1.0 - kept as f64 / labeled as f64
            },
            mean_kept: if boxes == 0 {
                0.0
            } else {
                kept as f64 / boxes as f64
            },
            labeled,
            kept,
            reference_ciou: both.map(|r| r.val_ciou).or(al.map(|a| a.0)),
            reference_filtered_pct: both.map(|r| r.val_filtered_pct),
            reference_mean_kept: both.map(|r| r.val_mean_kept).or(al.map(|a| a.1)),
        });
        records.extend(recs);
    }
    Ok(FilterSweepReport { rows, records })
}

/// One swept hyperparameter with its grid; the others stay at the given config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SigmaG(Vec<f64>),
    /// Swept under the max-saliency-smooth fusion, where the weights act.
    Lambdas(Vec<(f64, f64)>),
    Clip(Vec<(f64, f64)>),
}

impl SweepAxis {
    pub fn published_sigma_g() -> Self {
        SweepAxis::SigmaG(reference::SENSITIVITY_SIGMA_G.iter().map(|r| r.0).collect())
    }

    pub fn published_lambdas() -> Self {
        SweepAxis::Lambdas(reference::SENSITIVITY_LAMBDAS.iter().map(|r| r.0).collect())
    }

    pub fn published_clip() -> Self {
        SweepAxis::Clip(reference::SENSITIVITY_CLIP.iter().map(|r| r.0).collect())
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SigmaG(_) => "sigma_g",
            SweepAxis::Lambdas(_) => "lambdas",
            SweepAxis::Clip(_) => "clip",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::SigmaG(v) => v.len(),
            SweepAxis::Lambdas(v) => v.len(),
            SweepAxis::Clip(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn base(&self, cfg: &PipelineConfig) -> PipelineConfig {
        let mut c = *cfg;
        if matches!(self, SweepAxis::Lambdas(_)) {
            c.pinpoint.fusion = FusionMode::Msm;
        }
        c
    }

    fn point(&self, base: &PipelineConfig, i: usize) -> (String, PipelineConfig, Option<f64>) {
        let mut c = *base;
        match self {
            SweepAxis::SigmaG(v) => {
                c.pinpoint.cues.sigma_g = v[i];
                let r = reference::SENSITIVITY_SIGMA_G
                    .iter()
                    .find(|r| (r.0 - v[i]).abs() < 1e-9)
                    .map(|r| r.1);
                (format!("{}", v[i]), c, r)
            }
            SweepAxis::Lambdas(v) => {
                c.pinpoint.weights.lambda_e = v[i].0;
                c.pinpoint.weights.lambda_h = v[i].1;
                let r = reference::SENSITIVITY_LAMBDAS
                    .iter()
                    .find(|r| (r.0 .0 - v[i].0).abs() < 1e-9 && (r.0 .1 - v[i].1).abs() < 1e-9)
                    .map(|r| r.1);
                (format!("({}, {})", v[i].0, v[i].1), c, r)
            }
            SweepAxis::Clip(v) => {
                c.pinpoint.cues.norm_clip = v[i];
                let r = reference::SENSITIVITY_CLIP
                    .iter()
                    .find(|r| (r.0 .0 - v[i].0).abs() < 1e-9 && (r.0 .1 - v[i].1).abs() < 1e-9)
                    .map(|r| r.1);
                (format!("({}, {})", v[i].0, v[i].1), c, r)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub setting: String,
    pub is_default: bool,
    pub summary: MetricSummary,
    pub delta: f64,
    pub reference_ciou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub axis: String,
    pub rows: Vec<SensitivityRow>,
    pub records: Vec<EvalRecord>,
}

impl SensitivityReport {
    pub const HEADER: [&'static str; 8] = [
        "axis",
        "setting",
        "default",
        "ciou",
        "giou",
        "delta_ciou",
        "reference_ciou",
        "reference_tag",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.axis.clone(),
                    r.setting.clone(),
                    r.is_default.to_string(),
                    pct(r.summary.ciou),
                    pct(r.summary.giou),
                    pct(r.delta),
                    opt(r.reference_ciou, 1),
                    reference::REFERENCE_TAG.to_string(),
                ]
            })
            .collect()
    }
}

/// One row per grid point with the cIoU change vs the unswept configuration.
pub fn run_sensitivity_sweep(
    dataset: &[Sample],
    cfg: &PipelineConfig,
    provider: &dyn BackendProvider,
    axis: &SweepAxis,
    jobs: usize,
) -> Result<SensitivityReport, BenchError> {
    if axis.is_empty() {
        return Err(BenchError::Invalid("sweep grid is empty".into()));
    }
    let base = axis.base(cfg);
    let base_recs = evaluate(dataset, provider, jobs, "default", |s, b| {
        run_query(&s.image, &s.query, &base, b)
    })?;
    let base_summary = summary_of(&base_recs)?;
    let mut rows = Vec::with_capacity(axis.len());
    let mut records = Vec::new();
    for i in 0..axis.len() {
        let (setting, c, reference_ciou) = axis.point(&base, i);
        let is_default = c == base;
        let id = format!("{}={}", axis.name(), setting);
        let recs = if is_default {
            base_recs
                .iter()
                .cloned()
                .map(|mut r| {
                    r.config = id.clone();
                    r
                })
                .collect()
        } else {
            evaluate(dataset, provider, jobs, &id, |s, b| {
                run_query(&s.image, &s.query, &c, b)
            })?
        };
        let summary = if is_default {
            base_summary
        } else {
            summary_of(&recs)?
        };
        rows.push(SensitivityRow {
            setting,
            is_default,
            summary,
            delta: if is_default {
                0.0
            } else {
                summary.ciou - base_summary.ciou
            },
            reference_ciou,
        });
        records.extend(recs);
    }
    Ok(SensitivityReport {
        axis: axis.name().to_string(),
        rows,
        records,
    })
}
