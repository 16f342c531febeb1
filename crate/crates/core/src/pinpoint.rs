//! Point selection inside one bounding box: cues, fusion, peaks, Soft-NMS.

use serde::{Deserialize, Serialize};

use crate::cues::{compute_cues, CueMaps, CueParams};
use crate::error::Result;
use crate::fusion::{fuse, ConsensusMap, FusionMode, FusionWeights};
use crate::geometry::BBox;
use crate::raster::Image;
use crate::scalar::Scalar;
use crate::select::{local_maxima, select_points, CandidatePool, SelectedPoint, SelectionParams};

/// Every hyperparameter of the selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PinpointParams {
    pub cues: CueParams,
    pub fusion: FusionMode,
    pub weights: FusionWeights,
    pub selection: SelectionParams,
}

impl PinpointParams {
    pub fn validate(&self) -> Result<()> {
        self.cues.validate()?;
        self.selection.validate()
    }
}

/// Intermediate products of one selection, for diagnostics and debug dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct PinpointTrace<T> {
    pub cues: CueMaps<T>,
    pub consensus: ConsensusMap<T>,
    pub pool: CandidatePool<T>,
    pub selected: Vec<SelectedPoint<T>>,
}

/// Selects up to `N` interior points of `b`, in selection order.
pub fn pinpoint<T: Scalar>(
    img: &Image,
    b: &BBox,
    params: &PinpointParams,
) -> Result<Vec<SelectedPoint<T>>> {
    Ok(pinpoint_traced(img, b, params)?.selected)
}

pub fn pinpoint_traced<T: Scalar>(
    img: &Image,
    b: &BBox,
    params: &PinpointParams,
) -> Result<PinpointTrace<T>> {
    params.validate()?;
    let cues = compute_cues::<T>(img, b, &params.cues)?;
    let consensus = fuse(&cues, params.fusion, params.weights)?;
    let pool = local_maxima(&consensus, b)?;
    let selected = select_points(&pool, &params.selection, b.diagonal())?;
    Ok(PinpointTrace {
        cues,
        consensus,
        pool,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn flat_box_yields_nothing() {
        let img = Image::filled(80, 80, [128, 128, 128]).unwrap();
        let b = BBox::new(20, 20, 60, 60).unwrap();
        assert!(pinpoint::<f64>(&img, &b, &PinpointParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn disk_attracts_first_point() {
        let img = Image::from_fn(64, 64, |y, x| {
            if (x as i32 - 32).pow(2) + (y as i32 - 32).pow(2) <= 64 {
                [230, 60, 40]
            } else {
                [60, 110, 60]
            }
        })
        .unwrap();
        let b = BBox::new(12, 12, 52, 52).unwrap();
        let pts = pinpoint::<f64>(&img, &b, &PinpointParams::default()).unwrap();
        assert!(!pts.is_empty());
        let p: Point = pts[0].point;
        assert!(
            (p.x - 32).pow(2) + (p.y - 32).pow(2) <= 64,
            "first point {p:?} outside the disk"
        );
        assert!(pts.len() <= 5);
        assert!(pts.iter().all(|s| b.interior_contains(&s.point)));
        assert_eq!(
            pts,
            pinpoint::<f64>(&img, &b, &PinpointParams::default()).unwrap()
        );
    }
}
