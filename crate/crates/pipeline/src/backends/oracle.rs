//! Ground-truth-driven stand-ins for the localizer and the point labeler.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pinpoint_core::protocol::{Label, PointLabel};
use pinpoint_core::{BBox, Image, Mask, Point};

use super::{derive_seed, BackendError, LabelRequest, Localizer, PointLabeler};

/// Accuracy of an emitted label as a function of its emitted confidence.
///
/// Below `threshold` accuracy rises linearly from `acc_low` (at `conf_low`)
/// to `acc_threshold`; at and above it accuracy is flat at `acc_high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Calibration {
    pub conf_low: f64,
    pub threshold: f64,
    pub acc_low: f64,
    pub acc_threshold: f64,
    pub acc_high: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            conf_low: 0.2,
            threshold: 0.7,
            acc_low: 0.4,
            acc_threshold: 0.7,
            acc_high: 0.99,
        }
    }
}

impl Calibration {
    pub fn accuracy(&self, c: f64) -> f64 {
        if c >= self.threshold {
            self.acc_high
        } else {
            let t = ((c - self.conf_low) / (self.threshold - self.conf_low)).clamp(0.0, 1.0);
            self.acc_low + t * (self.acc_threshold - self.acc_low)
        }
    }
}

/// Noise model of the oracle labeler.
///
/// A point at distance `d` from the target boundary receives a low confidence
/// (uniform below the calibration threshold) with probability
/// `low_floor + (1 - low_floor) * exp(-d / boundary_bandwidth)`, otherwise a
/// high one; correctness is then drawn from the calibration curve. Flips are
/// therefore concentrated near boundaries and carry low confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelerNoise {
    pub enabled: bool,
    pub boundary_bandwidth: f64,
    pub low_floor: f64,
    pub calibration: Calibration,
    /// Confidence reported when noise is disabled.
    pub clean_confidence: f64,
}

impl Default for LabelerNoise {
    fn default() -> Self {
        Self {
            enabled: true,
            boundary_bandwidth: 2.0,
            low_floor: 0.03,
            calibration: Calibration::default(),
            clean_confidence: 0.95,
        }
    }
}

impl LabelerNoise {
    pub fn none() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn p_low(&self, boundary_dist: f64) -> f64 {
        self.low_floor + (1.0 - self.low_floor) * (-boundary_dist / self.boundary_bandwidth).exp()
    }
}

/// Ground truth and noise settings the oracle backends draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleWorld {
    pub target: Arc<Mask>,
    pub distractors: Vec<Arc<Mask>>,
    pub noise: LabelerNoise,
    /// Each box side moves by up to `jitter` times the box extent.
    pub jitter: f64,
    pub seed: u64,
}

impl OracleWorld {
    pub fn new(target: Mask, seed: u64) -> Self {
        Self {
            target: Arc::new(target),
            distractors: Vec::new(),
            noise: LabelerNoise::default(),
            jitter: 0.0,
            seed,
        }
    }

    pub fn localizer(&self) -> OracleLocalizer {
        OracleLocalizer {
            target: self.target.clone(),
            jitter: self.jitter,
            seed: self.seed,
        }
    }

    pub fn labeler(&self) -> OracleLabeler {
        OracleLabeler {
            target: self.target.clone(),
            noise: self.noise,
            seed: self.seed,
        }
    }
}

/// Returns the target's bounding box with seeded per-side jitter.
#[derive(Debug, Clone)]
pub struct OracleLocalizer {
    target: Arc<Mask>,
    jitter: f64,
    seed: u64,
}

impl OracleLocalizer {
    pub fn jittered_box(&self) -> Option<BBox> {
        let gt = self.target.bounding_box()?;
        if self.jitter <= 0.0 {
            return Some(gt);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[0x10ca]));
        let (w, h) = ((gt.x_max - gt.x_min) as f64, (gt.y_max - gt.y_min) as f64);
        let mut side = |v: i32, extent: f64| {
            v + (rng.random_range(-1.0..=1.0) * self.jitter * extent).round() as i32
        };
        let j = BBox::from_corners_unchecked(
            side(gt.x_min, w),
            side(gt.y_min, h),
            side(gt.x_max, w),
            side(gt.y_max, h),
        );
        let bounds = BBox::from_corners_unchecked(
            0,
            0,
            self.target.width() as i32 - 1,
            self.target.height() as i32 - 1,
        );
        Some(j.clip_to(&bounds).filter(BBox::is_valid).unwrap_or(gt))
    }
}

impl Localizer for OracleLocalizer {
    fn localize(&self, img: &Image, _query: &str) -> Result<Vec<BBox>, BackendError> {
        if img.height() != self.target.height() || img.width() != self.target.width() {
            return Err(BackendError::Invalid(
                "image does not match the oracle world".into(),
            ));
        }
        Ok(self
            .jittered_box()
            .filter(BBox::is_valid)
            .into_iter()
            .collect())
    }
}

/// Labels points by target membership, with boundary-dependent noise.
#[derive(Debug, Clone)]
pub struct OracleLabeler {
    target: Arc<Mask>,
    noise: LabelerNoise,
    seed: u64,
}

const BOUNDARY_SEARCH: i32 = 32;

impl OracleLabeler {
    /// Distance to the nearest pixel of opposite target membership, capped.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let m = &self.target;
        let inside = m.get(p.y as usize, p.x as usize);
        let mut best = i64::MAX;
        for dy in -BOUNDARY_SEARCH..=BOUNDARY_SEARCH {
            let y = p.y + dy;
            if y < 0 || y >= m.height() as i32 {
                continue;
            }
            for dx in -BOUNDARY_SEARCH..=BOUNDARY_SEARCH {
                let x = p.x + dx;
                if x < 0 || x >= m.width() as i32 {
                    continue;
                }
                if m.get(y as usize, x as usize) != inside {
                    best = best.min((dx * dx + dy * dy) as i64);
                }
            }
        }
        if best == i64::MAX {
            BOUNDARY_SEARCH as f64
        } else {
            (best as f64).sqrt()
        }
    }

    pub fn label_point(&self, bbox: &BBox, p: Point) -> PointLabel {
        let truth = if self.target.get(p.y as usize, p.x as usize) {
            Label::Positive
        } else {
            Label::Negative
        };
        if !self.noise.enabled {
            return PointLabel {
                label: truth,
                confidence: self.noise.clean_confidence,
            };
        }
        let key = [
            p.x as i64,
            p.y as i64,
            bbox.x_min as i64,
            bbox.y_min as i64,
            bbox.x_max as i64,
            bbox.y_max as i64,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &key));
        let cal = &self.noise.calibration;
        let raw = if rng.random_bool(self.noise.p_low(self.boundary_distance(p)).clamp(0.0, 1.0)) {
            rng.random_range(cal.conf_low..cal.threshold)
        } else {
            rng.random_range(cal.threshold..=1.0)
        };
        // Verbalized confidences come with two decimals.
        let confidence = (raw * 100.0).round() / 100.0;
        let correct = rng.random_bool(cal.accuracy(confidence));
        let label = match (truth, correct) {
            (l, true) => l,
            (Label::Positive, false) => Label::Negative,
            (Label::Negative, false) => Label::Positive,
        };
        PointLabel { label, confidence }
    }
}

impl PointLabeler for OracleLabeler {
    fn label_batch(
        &self,
        img: &Image,
        _query: &str,
        requests: &[LabelRequest<'_>],
    ) -> Vec<Result<Vec<PointLabel>, BackendError>> {
        requests
            .iter()
            .map(|r| {
                if img.height() != self.target.height() || img.width() != self.target.width() {
                    return Err(BackendError::Invalid(
                        "image does not match the oracle world".into(),
                    ));
                }
                if let Some(p) = r.points.iter().find(|p| !img.bounds().contains(p)) {
                    return Err(BackendError::Invalid(format!(
                        "point ({}, {}) outside the image",
                        p.x, p.y
                    )));
                }
                Ok(r.points
                    .iter()
                    .map(|&p| self.label_point(&r.bbox, p))
                    .collect())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_world() -> (Image, OracleWorld) {
        let img = Image::filled(64, 64, [0, 0, 0]).unwrap();
        let m = Mask::from_fn(64, 64, |y, x| {
            (x as i32 - 32).pow(2) + (y as i32 - 32).pow(2) <= 225
        })
        .unwrap();
        (img, OracleWorld::new(m, 3))
    }

    #[test]
    fn zero_jitter_is_exact() {
        let (img, w) = disk_world();
        assert_eq!(
            w.localizer().localize(&img, "q").unwrap(),
            vec![BBox::new(17, 17, 47, 47).unwrap()]
        );
    }

    #[test]
    fn jitter_is_seeded() {
        let (img, mut w) = disk_world();
        w.jitter = 0.1;
        let a = w.localizer().localize(&img, "q").unwrap();
        assert_eq!(a, w.localizer().localize(&img, "q").unwrap());
        let gt = BBox::new(17, 17, 47, 47).unwrap();
        assert!((a[0].x_min - gt.x_min).abs() <= 3);
    }

    #[test]
    fn clean_labels() {
        let (img, mut w) = disk_world();
        w.noise = LabelerNoise::none();
        let b = BBox::new(10, 10, 54, 54).unwrap();
        let pts = [Point::new(32, 32), Point::new(12, 12)];
        let out = w.labeler().label_batch(
            &img,
            "q",
            &[LabelRequest {
                bbox: b,
                points: &pts,
            }],
        );
        let l = out[0].as_ref().unwrap();
        assert_eq!(l[0].label, Label::Positive);
        assert!(l[0].confidence >= 0.9);
        assert_eq!(l[1].label, Label::Negative);
    }

    #[test]
    fn boundary_distance_is_exact_nearby() {
        let (_, w) = disk_world();
        let l = w.labeler();
        let m = &w.target;
        let brute = |p: Point| {
            let inside = m.get(p.y as usize, p.x as usize);
            let mut best = f64::INFINITY;
            for y in 0..m.height() {
                for x in 0..m.width() {
                    if m.get(y, x) != inside {
                        best = best.min(
                            ((x as f64 - p.x as f64).powi(2) + (y as f64 - p.y as f64).powi(2))
                                .sqrt(),
                        );
                    }
                }
            }
            best
        };
        for p in [
            Point::new(32, 32),
            Point::new(47, 32),
            Point::new(20, 25),
            Point::new(5, 5),
        ] {
            assert_eq!(l.boundary_distance(p), brute(p));
        }
    }
}
