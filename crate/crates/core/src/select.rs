//! Candidate extraction and Soft-NMS diversity selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cues::scaled_pixels;
use crate::error::{invalid, Result};
use crate::fusion::ConsensusMap;
use crate::geometry::{BBox, Point};
use crate::scalar::{total_cmp, Scalar};

/// A local maximum of the consensus map with its score `C(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<T> {
    pub point: Point,
    pub score: T,
}

/// Candidates strictly inside the source box, all with positive score.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidatePool<T> {
    pub candidates: Vec<Candidate<T>>,
}

impl<T: Scalar> CandidatePool<T> {
    pub fn new(candidates: Vec<Candidate<T>>) -> Self {
        Self { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Orders by score descending, then `y` ascending, then `x` ascending.
pub fn rank_order<T: Scalar>(a: (T, Point), b: (T, Point)) -> Ordering {
    total_cmp(&b.0, &a.0)
        .then(a.1.y.cmp(&b.1.y))
        .then(a.1.x.cmp(&b.1.x))
}

/// 3x3, 8-connected peaks of `c` inside `interior(b)`.
///
/// A pixel qualifies when its score is positive, no neighbour exceeds it, at least
/// one neighbour is strictly lower, and no equal-valued neighbour precedes it in
/// row-major order (one representative per small plateau).
pub fn local_maxima<T: Scalar>(c: &ConsensusMap<T>, b: &BBox) -> Result<CandidatePool<T>> {
    if !c.extended.contains_box(b) {
        return Err(b.invalid("box is not covered by the consensus map"));
    }
    let mut candidates = Vec::new();
    for p in b.interior_points() {
        let v = c.at(p.x, p.y).expect("interior lies inside the map");
        if v <= T::zero() {
            continue;
        }
        let mut is_peak = true;
        let mut strictly_above_one = false;
        'scan: for dy in -1..=1 {
            for dx in -1..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let n = c
                    .at(p.x + dx, p.y + dy)
                    .expect("neighbours of interior pixels lie inside b");
                if n > v {
                    is_peak = false;
                    break 'scan;
                }
                if n < v {
                    strictly_above_one = true;
                } else if dy < 0 || (dy == 0 && dx < 0) {
                    // equal neighbour earlier in row-major order owns the plateau
                    is_peak = false;
                    break 'scan;
                }
            }
        }
        if is_peak && strictly_above_one {
            candidates.push(Candidate { point: p, score: v });
        }
    }
    Ok(CandidatePool { candidates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    /// Point budget `N`.
    pub budget: usize,
    /// Suppression bandwidth as a fraction of the box diagonal.
    pub sigma_nms: f64,
    /// Termination floor on the best virtual score.
    pub floor: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            budget: 5,
            sigma_nms: 0.10,
            floor: 1e-3,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(invalid("budget", "must be >= 1"));
        }
        if !(self.sigma_nms > 0.0 && self.sigma_nms.is_finite()) {
            return Err(invalid("sigma_nms", "must be positive"));
        }
        if !(self.floor > 0.0) {
            return Err(invalid("floor", "must be positive"));
        }
        Ok(())
    }
}

/// A selected point, its consensus score and its virtual score at selection time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedPoint<T> {
    pub point: Point,
    pub score: T,
    pub virtual_score: T,
}

/// Greedy Soft-NMS selection with `sigma_nms` scaled to whole pixels by the box diagonal.
pub fn select_points<T: Scalar>(
    pool: &CandidatePool<T>,
    params: &SelectionParams,
    diagonal: f64,
) -> Result<Vec<SelectedPoint<T>>> {
    params.validate()?;
    let sigma = scaled_pixels(params.sigma_nms, diagonal) as f64;
    Ok(soft_nms_select(
        pool,
        params.budget,
        sigma,
        T::lit(params.floor),
    ))
}

/// Greedy selection by virtual score `C(p) (1 - exp(-d_min^2 / (2 sigma^2)))`, where
/// `d_min` is the distance to the nearest already-selected point (infinite for the
/// first pick). Stops at `budget` points, on pool exhaustion, or when the best
/// remaining virtual score is `<= floor`. Ties follow [`rank_order`].
pub fn soft_nms_select<T: Scalar>(
    pool: &CandidatePool<T>,
    budget: usize,
    sigma_px: f64,
    floor: T,
) -> Vec<SelectedPoint<T>> {
    let denom = 2.0 * sigma_px * sigma_px;
    let mut remaining: Vec<(Candidate<T>, Option<i64>)> =
        pool.candidates.iter().map(|&c| (c, None)).collect();
    let mut selected: Vec<SelectedPoint<T>> = Vec::with_capacity(budget.min(remaining.len()));
    while selected.len() < budget && !remaining.is_empty() {
        let virtual_score = |(c, d2): &(Candidate<T>, Option<i64>)| match d2 {
            None => c.score,
            Some(d2) => c.score * (T::one() - T::lit((-(*d2 as f64) / denom).exp())),
        };
        let (best_idx, best_score) = remaining
            .iter()
            .enumerate()
            .map(|(i, entry)| (i, virtual_score(entry)))
            .min_by(|a, b| rank_order((a.1, remaining[a.0].0.point), (b.1, remaining[b.0].0.point)))
            .expect("non-empty");
        if best_score <= floor {
            break;
        }
        let (chosen, _) = remaining.swap_remove(best_idx);
        for (c, d2) in remaining.iter_mut() {
            let d = c.point.dist2(&chosen.point);
            *d2 = Some(d2.map_or(d, |old| old.min(d)));
        }
        selected.push(SelectedPoint {
            point: chosen.point,
            score: chosen.score,
            virtual_score: best_score,
        });
    }
    selected
}
