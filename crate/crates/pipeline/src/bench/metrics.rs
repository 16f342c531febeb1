//! Cumulative and mean intersection-over-union.

use serde::{Deserialize, Serialize};

use pinpoint_core::{CoreError, Mask};

/// Pixel counts of one prediction against its ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
}

impl Overlap {
    pub fn of(pred: &Mask, gt: &Mask) -> Result<Self, CoreError> {
        let (intersection, union) = pred.overlap_counts(gt)?;
        Ok(Self {
            intersection,
            union,
        })
    }

    /// IoU, with an empty union (both masks empty) counted as a perfect match.
    pub fn iou(&self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub ciou: f64,
    pub giou: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("metrics need at least one record")]
pub struct EmptyRecords;

/// `sum |P ∩ G| / sum |P ∪ G|`.
pub fn ciou(overlaps: &[Overlap]) -> Result<f64, EmptyRecords> {
    if overlaps.is_empty() {
        return Err(EmptyRecords);
    }
    let (i, u) = overlaps
        .iter()
        .fold((0u64, 0u64), |(i, u), o| (i + o.intersection, u + o.union));
    Ok(if u == 0 { 1.0 } else { i as f64 / u as f64 })
}

/// Mean per-sample IoU.
pub fn giou(overlaps: &[Overlap]) -> Result<f64, EmptyRecords> {
    if overlaps.is_empty() {
        return Err(EmptyRecords);
    }
    Ok(overlaps.iter().map(Overlap::iou).sum::<f64>() / overlaps.len() as f64)
}

pub fn summarize(overlaps: &[Overlap]) -> Result<MetricSummary, EmptyRecords> {
    Ok(MetricSummary {
        ciou: ciou(overlaps)?,
        giou: giou(overlaps)?,
        count: overlaps.len(),
    })
}
