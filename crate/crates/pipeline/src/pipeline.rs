//! End-to-end orchestration: localize, select, label, filter, segment, merge.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pinpoint_core::protocol::{Label, PointLabel};
use pinpoint_core::{pinpoint, BBox, CoreError, Image, Mask, PinpointParams, Point};

use crate::backends::{derive_seed, Backends, LabelRequest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub point: Point,
    pub label: Label,
    pub confidence: f64,
}

/// Labels allowed through the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allowlist {
    #[default]
    Both,
    Positive,
    Negative,
}

impl Allowlist {
    pub const ALL: [Allowlist; 3] = [Allowlist::Both, Allowlist::Positive, Allowlist::Negative];

    pub fn allows(self, l: Label) -> bool {
        match self {
            Allowlist::Both => true,
            Allowlist::Positive => l == Label::Positive,
            Allowlist::Negative => l == Label::Negative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Allowlist::Both => "both",
            Allowlist::Positive => "positive",
            Allowlist::Negative => "negative",
        }
    }
}

impl std::fmt::Display for Allowlist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Allowlist {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both" | "+-" | "positive,negative" | "negative,positive" => Ok(Allowlist::Both),
            "positive" | "+" => Ok(Allowlist::Positive),
            "negative" | "-" => Ok(Allowlist::Negative),
            other => Err(format!("unknown allowlist `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub tau: f64,
    pub allowlist: Allowlist,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            tau: 0.7,
            allowlist: Allowlist::Both,
        }
    }
}

impl FilterPolicy {
    pub const IDENTITY: FilterPolicy = FilterPolicy {
        tau: 0.0,
        allowlist: Allowlist::Both,
    };

    pub fn validate(&self) -> Result<(), String> {
        if (0.0..=1.0).contains(&self.tau) {
            Ok(())
        } else {
            Err(format!("tau must lie in [0, 1], got {}", self.tau))
        }
    }
}

/// Keeps `{p : c >= tau and label in A}`, preserving order.
pub fn filter_points(points: &[LabeledPoint], policy: &FilterPolicy) -> Vec<LabeledPoint> {
    points
        .iter()
        .filter(|p| p.confidence >= policy.tau && policy.allowlist.allows(p.label))
        .copied()
        .collect()
}

/// Pixelwise OR; an empty list yields the all-zero mask.
pub fn merge_masks(masks: &[Mask], height: usize, width: usize) -> Result<Mask, CoreError> {
    let mut out = Mask::zeros(height, width)?;
    for m in masks {
        out.union_with(m)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub pinpoint: PinpointParams,
    pub filter: FilterPolicy,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn budget(&self) -> usize {
        self.pinpoint.selection.budget
    }
}

/// Progressive pipeline configurations, from box-only to the full pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::S1, Stage::S2, Stage::S3, Stage::S4, Stage::S5];

    pub fn description(self) -> &'static str {
        match self {
            Stage::S1 => "box only",
            Stage::S2 => "+ random interior points (no labels)",
            Stage::S3 => "+ selected points (no labels)",
            Stage::S4 => "+ labels (no filter)",
            Stage::S5 => "+ confidence filter (full pipeline)",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::S1 => "s1",
            Stage::S2 => "s2",
            Stage::S3 => "s3",
            Stage::S4 => "s4",
            Stage::S5 => "s5",
        }
    }

    fn selector(self) -> Selector {
        match self {
            Stage::S1 => Selector::None,
            Stage::S2 => Selector::Random,
            _ => Selector::Pinpoint,
        }
    }

    fn labels(self) -> bool {
        matches!(self, Stage::S4 | Stage::S5)
    }

    /// Filter applied at this stage; `None` passes every point as positive.
    pub fn policy(self, cfg: &PipelineConfig) -> Option<FilterPolicy> {
        match self {
            Stage::S4 => Some(FilterPolicy::IDENTITY),
            Stage::S5 => Some(cfg.filter),
            _ => None,
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Selector {
    None,
    Random,
    Pinpoint,
}

/// Wall-clock per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub localization: f64,
    pub point_selection: f64,
    pub point_labeling: f64,
    pub point_filtering: f64,
    pub segmentation: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.localization
            + self.point_selection
            + self.point_labeling
            + self.point_filtering
            + self.segmentation
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub point: Point,
    /// Consensus score; `None` for randomly sampled points.
    pub score: Option<f64>,
}

/// Per-box record of every intermediate product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    /// Box as proposed by the localizer.
    pub proposed: BBox,
    /// Box after clipping to the image; `None` if nothing remained.
    pub bbox: Option<BBox>,
    pub points: Vec<ScoredPoint>,
    /// One entry per point when labeling ran and succeeded.
    pub labels: Option<Vec<PointLabel>>,
    pub kept: Vec<LabeledPoint>,
    pub box_only: bool,
    pub mask_pixels: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub mask: Mask,
    pub box_masks: Vec<Mask>,
    pub boxes: Vec<BoxRecord>,
    pub timings: StageTimings,
    pub model_calls: usize,
    pub localization_error: Option<String>,
}

/// Serializable summary of a [`PipelineResult`] (masks reduced to pixel counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub boxes: Vec<BoxRecord>,
    pub timings: StageTimings,
    pub model_calls: usize,
    pub localization_error: Option<String>,
    pub mask_pixels: usize,
}

impl PipelineResult {
    pub fn record(&self) -> ResultRecord {
        ResultRecord {
            boxes: self.boxes.clone(),
            timings: self.timings,
            model_calls: self.model_calls,
            localization_error: self.localization_error.clone(),
            mask_pixels: self.mask.count(),
        }
    }

    pub fn labeled_count(&self) -> usize {
        self.boxes.iter().map(|b| b.points.len()).sum()
    }

    pub fn kept_count(&self) -> usize {
        self.boxes.iter().map(|b| b.kept.len()).sum()
    }
}

/// Localization, selection and labeling done; filtering and segmentation pending.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub boxes: Vec<BoxRecord>,
    pub timings: StageTimings,
    pub model_calls: usize,
    pub localization_error: Option<String>,
    labeled: bool,
}

fn random_interior(b: &BBox, n: usize, seed: u64) -> Vec<ScoredPoint> {
    let pts: Vec<Point> = b.interior_points().collect();
    if pts.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[
            b.x_min as i64,
            b.y_min as i64,
            b.x_max as i64,
            b.y_max as i64,
        ],
    ));
    sample(&mut rng, pts.len(), n.min(pts.len()))
        .into_iter()
        .map(|i| ScoredPoint {
            point: pts[i],
            score: None,
        })
        .collect()
}

/// Runs localization, point selection and (when the stage uses them) labels.
pub fn prepare(
    img: &Image,
    query: &str,
    cfg: &PipelineConfig,
    stage: Stage,
    backends: Backends<'_>,
) -> Prepared {
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let proposed = backends.localizer.localize(img, query);
    timings.localization = ms_since(t);
    let proposed = match proposed {
        Ok(b) => b,
        Err(e) => {
            return Prepared {
                boxes: Vec::new(),
                timings,
                model_calls: 1,
                localization_error: Some(e.to_string()),
                labeled: stage.labels(),
            }
        }
    };

    let t = Instant::now();
    let bounds = img.bounds();
    let mut boxes: Vec<BoxRecord> = proposed
        .into_iter()
        .map(|p| {
            let bbox = p.clip_to(&bounds).filter(BBox::is_valid);
            let mut rec = BoxRecord {
                proposed: p,
                bbox,
                points: Vec::new(),
                labels: None,
                kept: Vec::new(),
                box_only: false,
                mask_pixels: 0,
                errors: Vec::new(),
            };
            let Some(b) = bbox else {
                rec.errors.push("box lies outside the image".into());
                return rec;
            };
            match stage.selector() {
                Selector::None => {}
                Selector::Random => rec.points = random_interior(&b, cfg.budget(), cfg.seed),
                Selector::Pinpoint => match pinpoint::<f64>(img, &b, &cfg.pinpoint) {
                    Ok(sel) => {
                        rec.points = sel
                            .into_iter()
                            .map(|s| ScoredPoint {
                                point: s.point,
                                score: Some(s.score),
                            })
                            .collect()
                    }
                    Err(e) => rec.errors.push(format!("point selection: {e}")),
                },
            }
            rec
        })
        .collect();
    timings.point_selection = ms_since(t);

    let mut model_calls = 1;
    if stage.labels() {
        let t = Instant::now();
        let pts: Vec<Vec<Point>> = boxes
            .iter()
            .map(|b| b.points.iter().map(|p| p.point).collect())
            .collect();
        let idx: Vec<usize> = (0..boxes.len())
            .filter(|&i| !pts[i].is_empty() && boxes[i].bbox.is_some())
            .collect();
        if !idx.is_empty() {
            let requests: Vec<LabelRequest<'_>> = idx
                .iter()
                .map(|&i| LabelRequest {
                    bbox: boxes[i].bbox.unwrap(),
                    points: &pts[i],
                })
                .collect();
            let results = backends.labeler.label_batch(img, query, &requests);
            model_calls += 1;
            for (k, &i) in idx.iter().enumerate() {
                match results.get(k) {
                    Some(Ok(l)) if l.len() == pts[i].len() => boxes[i].labels = Some(l.clone()),
                    Some(Ok(l)) => boxes[i].errors.push(format!(
                        "labeler returned {} labels for {} points",
                        l.len(),
                        pts[i].len()
                    )),
                    Some(Err(e)) => boxes[i].errors.push(format!("labeling: {e}")),
                    None => boxes[i].errors.push("labeling: missing response".into()),
                }
            }
        }
        timings.point_labeling = ms_since(t);
    }
    Prepared {
        boxes,
        timings,
        model_calls,
        localization_error: None,
        labeled: stage.labels(),
    }
}

/// Filters labeled points (or passes unlabeled ones as positive) and segments.
pub fn finish(
    img: &Image,
    prepared: &Prepared,
    policy: Option<FilterPolicy>,
    backends: Backends<'_>,
) -> PipelineResult {
    let mut timings = prepared.timings;
    let mut boxes = prepared.boxes.clone();

    let t = Instant::now();
    for rec in &mut boxes {
        let labeled: Vec<LabeledPoint> = match (&rec.labels, prepared.labeled) {
            (Some(l), true) => rec
                .points
                .iter()
                .zip(l)
                .map(|(p, l)| LabeledPoint {
                    point: p.point,
                    label: l.label,
                    confidence: l.confidence,
                })
                .collect(),
            // A box whose labeling failed contributes no prompts.
            (None, true) => Vec::new(),
            (_, false) => rec
                .points
                .iter()
                .map(|p| LabeledPoint {
                    point: p.point,
                    label: Label::Positive,
                    confidence: 1.0,
                })
                .collect(),
        };
        rec.kept = match policy {
            Some(p) if prepared.labeled => filter_points(&labeled, &p),
            _ => labeled,
        };
    }
    timings.point_filtering = ms_since(t);

    let t = Instant::now();
    let (h, w) = (img.height(), img.width());
    let mut box_masks = Vec::with_capacity(boxes.len());
    for rec in &mut boxes {
        let Some(b) = rec.bbox else {
            box_masks.push(Mask::zeros(h, w).expect("image is non-empty"));
            continue;
        };
        rec.box_only = rec.kept.is_empty();
        let pts: Vec<Point> = rec.kept.iter().map(|p| p.point).collect();
        let labels: Vec<Label> = rec.kept.iter().map(|p| p.label).collect();
        let m = match backends.segmenter.segment(img, &b, &pts, &labels) {
            Ok(m) => m,
            Err(e) => {
                rec.errors.push(format!("segmentation: {e}"));
                Mask::zeros(h, w).expect("image is non-empty")
            }
        };
        rec.mask_pixels = m.count();
        box_masks.push(m);
    }
    let mask = merge_masks(&box_masks, h, w).expect("backend masks match the image");
    timings.segmentation = ms_since(t);

    PipelineResult {
        mask,
        box_masks,
        boxes,
        timings,
        model_calls: prepared.model_calls,
        localization_error: prepared.localization_error.clone(),
    }
}

pub fn run_stage_config(
    img: &Image,
    query: &str,
    stage: Stage,
    cfg: &PipelineConfig,
    backends: Backends<'_>,
) -> PipelineResult {
    let prepared = prepare(img, query, cfg, stage, backends);
    finish(img, &prepared, stage.policy(cfg), backends)
}

/// The full pipeline under `cfg`.
pub fn run_query(
    img: &Image,
    query: &str,
    cfg: &PipelineConfig,
    backends: Backends<'_>,
) -> PipelineResult {
    run_stage_config(img, query, Stage::S5, cfg, backends)
}
