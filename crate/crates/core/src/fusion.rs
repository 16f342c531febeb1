//! Fusion of the normalized cues into a consensus map.

use serde::{Deserialize, Serialize};

use crate::cues::CueMaps;
use crate::error::{invalid, Result};
use crate::geometry::BBox;
use crate::raster::Raster;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    /// `S (1 - E) (1 - H) G`: every cue must agree.
    #[default]
    Mult,
    /// `S max(1 - lambda_E E - lambda_H H, 0) G`: saliency dominates, E/H act as guards.
    Msm,
    /// Same formula as `Msm`, used with unit weights for per-cue dropout runs.
    LinearDiagnostic,
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FusionMode::Mult => "mult",
            FusionMode::Msm => "msm",
            FusionMode::LinearDiagnostic => "linear-diagnostic",
        })
    }
}

impl std::str::FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mult" => Ok(FusionMode::Mult),
            "msm" => Ok(FusionMode::Msm),
            "linear-diagnostic" | "linear" => Ok(FusionMode::LinearDiagnostic),
            other => Err(format!(
                "unknown fusion mode `{other}` (mult, msm, linear-diagnostic)"
            )),
        }
    }
}

/// Edge and entropy penalty weights of the linear fusion modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub lambda_e: f64,
    pub lambda_h: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        Self {
            lambda_e: 0.5,
            lambda_h: 1.5,
        }
    }
}

impl FusionWeights {
    pub const UNIT: FusionWeights = FusionWeights {
        lambda_e: 1.0,
        lambda_h: 1.0,
    };
}

/// Consensus scores over the extended crop.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMap<T> {
    pub values: Raster<T>,
    pub mode: FusionMode,
    pub weights: FusionWeights,
    /// Box the map was grown from.
    pub source: BBox,
    /// Image-space placement of `values`.
    pub extended: BBox,
}

impl<T: Scalar> ConsensusMap<T> {
    /// Score at an image-space location, `None` outside the extended crop.
    pub fn at(&self, x: i32, y: i32) -> Option<T> {
        let (cx, cy) = (x - self.extended.x_min, y - self.extended.y_min);
        if cx < 0
            || cy < 0
            || cx as usize >= self.values.width()
            || cy as usize >= self.values.height()
        {
            return None;
        }
        Some(self.values.get(cy as usize, cx as usize))
    }
}

#[inline]
pub fn fuse_pixel<T: Scalar>(
    s: T,
    e: T,
    h: T,
    g: T,
    mode: FusionMode,
    weights: &FusionWeights,
) -> T {
    match mode {
        FusionMode::Mult => s * (T::one() - e) * (T::one() - h) * g,
        FusionMode::Msm | FusionMode::LinearDiagnostic => {
            let guard = T::one() - T::lit(weights.lambda_e) * e - T::lit(weights.lambda_h) * h;
            s * guard.max(T::zero()) * g
        }
    }
}

pub fn fuse<T: Scalar>(
    cues: &CueMaps<T>,
    mode: FusionMode,
    weights: FusionWeights,
) -> Result<ConsensusMap<T>> {
    if mode != FusionMode::Mult {
        for (name, v) in [
            ("lambda_e", weights.lambda_e),
            ("lambda_h", weights.lambda_h),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be >= 0, got {v}")));
            }
        }
    }
    let data = cues
        .s
        .values()
        .iter()
        .zip(cues.e.values())
        .zip(cues.h.values())
        .zip(cues.g.values())
        .map(|(((&s, &e), &h), &g)| fuse_pixel(s, e, h, g, mode, &weights))
        .collect();
    Ok(ConsensusMap {
        values: Raster::new(cues.height(), cues.width(), data)?,
        mode,
        weights,
        source: cues.source,
        extended: cues.extended,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const MODES: [FusionMode; 3] = [
        FusionMode::Mult,
        FusionMode::Msm,
        FusionMode::LinearDiagnostic,
    ];

    #[test]
    fn identity_case_under_all_modes() {
        for mode in MODES {
            assert_eq!(
                fuse_pixel(1.0, 0.0, 0.0, 1.0, mode, &FusionWeights::default()),
                1.0
            );
        }
    }

    #[test]
    fn full_edge_zeroes_mult() {
        assert_eq!(
            fuse_pixel(
                0.9,
                1.0,
                0.1,
                0.8,
                FusionMode::Mult,
                &FusionWeights::default()
            ),
            0.0
        );
    }

    #[test]
    fn msm_example() {
        let w = FusionWeights {
            lambda_e: 0.5,
            lambda_h: 1.5,
        };
        assert_abs_diff_eq!(
            fuse_pixel(0.8, 0.4, 0.2, 1.0, FusionMode::Msm, &w),
            0.40,
            epsilon = 1e-12
        );
        // rectifier
        assert_eq!(fuse_pixel(0.8, 1.0, 1.0, 1.0, FusionMode::Msm, &w), 0.0);
    }

    #[test]
    fn parse_modes() {
        for mode in MODES {
            assert_eq!(mode.to_string().parse::<FusionMode>().unwrap(), mode);
        }
        assert!("sum".parse::<FusionMode>().is_err());
    }
}
