//! Training-free point selection for box-prompted segmentation.
//!
//! Given an image and a coarse box, four cue maps (color-contrast saliency,
//! edge density, local entropy, a centered Gaussian prior) are computed on an
//! enlarged crop, fused into a consensus map, and a small, spatially diverse
//! set of interior points is chosen by Soft-NMS. The [`protocol`] module holds
//! the prompt templates and strict parsers for the structured model responses
//! that label those points.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod color;
pub mod cues;
pub mod entropy;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod pinpoint;
pub mod protocol;
pub mod raster;
pub mod scalar;
pub mod select;
pub mod stats;

pub use color::{rgb_to_lab, to_cielab, to_gray, LabImage};
pub use cues::{compute_cues, extend_box, CueMaps, CueParams, ExtendedCrop, RawCues};
pub use error::{CoreError, Result};
pub use fusion::{fuse, ConsensusMap, FusionMode, FusionWeights};
pub use geometry::{BBox, Point};
pub use pinpoint::{pinpoint, pinpoint_traced, PinpointParams, PinpointTrace};
pub use raster::{Image, Mask, Raster};
pub use scalar::Scalar;
pub use select::{
    local_maxima, select_points, soft_nms_select, Candidate, CandidatePool, SelectedPoint,
    SelectionParams,
};

/// Double-precision single-channel map.
pub type GrayMap = Raster<f64>;
/// Single-precision single-channel map.
pub type GrayMapF32 = Raster<f32>;
pub type Cues = CueMaps<f64>;
pub type CuesF32 = CueMaps<f32>;
pub type Consensus = ConsensusMap<f64>;
pub type ConsensusF32 = ConsensusMap<f32>;
pub type Selected = SelectedPoint<f64>;
pub type SelectedF32 = SelectedPoint<f32>;
