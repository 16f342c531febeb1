//! The three model-dependent stages behind pluggable traits.

mod doubles;
mod oracle;
mod pseudo_sam;
mod remote;

pub use doubles::{
    CallCounter, CountingLabeler, CountingLocalizer, DelayedLabeler, DelayedLocalizer,
    FixedLocalizer,
};
pub use oracle::{Calibration, LabelerNoise, OracleLabeler, OracleLocalizer, OracleWorld};
pub use pseudo_sam::{PseudoSam, DEFAULT_DELTA_E};
pub use remote::{
    ModelRequest, RemoteConfig, RemoteLabeler, RemoteLocalizer, RemoteSegmenter, SegmentRequest,
    ENV_SAM_URL, ENV_TOKEN, ENV_VLM_URL,
};

use pinpoint_core::protocol::{Label, PointLabel, ProtocolError};
use pinpoint_core::{BBox, Image, Mask, Point};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("response parse: {0}")]
    Parse(#[from] ProtocolError),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("invalid backend input: {0}")]
    Invalid(String),
}

/// Points of one box sent for labeling.
#[derive(Debug, Clone, Copy)]
pub struct LabelRequest<'a> {
    pub bbox: BBox,
    pub points: &'a [Point],
}

/// Proposes boxes for the referent of a query; one model dispatch per call.
pub trait Localizer: Send + Sync {
    fn localize(&self, img: &Image, query: &str) -> Result<Vec<BBox>, BackendError>;
}

/// Labels the points of every box of one image in a single dispatch.
///
/// The result has one entry per request; a successful entry holds exactly one
/// label per point, in input order.
pub trait PointLabeler: Send + Sync {
    fn label_batch(
        &self,
        img: &Image,
        query: &str,
        requests: &[LabelRequest<'_>],
    ) -> Vec<Result<Vec<PointLabel>, BackendError>>;
}

/// Promptable segmenter. Empty `points` means a box-only prompt.
pub trait Segmenter: Send + Sync {
    fn segment(
        &self,
        img: &Image,
        bbox: &BBox,
        points: &[Point],
        labels: &[Label],
    ) -> Result<Mask, BackendError>;
}

/// Borrowed view of one backend of each kind.
#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub localizer: &'a dyn Localizer,
    pub labeler: &'a dyn PointLabeler,
    pub segmenter: &'a dyn Segmenter,
}

/// Owned backends, as built per sample by a provider.
pub struct BackendSet {
    pub localizer: Box<dyn Localizer>,
    pub labeler: Box<dyn PointLabeler>,
    pub segmenter: Box<dyn Segmenter>,
}

impl BackendSet {
    pub fn view(&self) -> Backends<'_> {
        Backends {
            localizer: self.localizer.as_ref(),
            labeler: self.labeler.as_ref(),
            segmenter: self.segmenter.as_ref(),
        }
    }
}

/// splitmix64 finalizer, used to derive independent per-item seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of integers into one seed.
pub fn derive_seed(seed: u64, parts: &[i64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed), |acc, &p| mix64(acc ^ p as u64))
}
