use thiserror::Error;

/// Errors raised by the raster kernels and selection stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("raster must be at least 1x1, got {height}x{width}")]
    EmptyRaster { height: usize, width: usize },
    #[error("buffer holds {actual} values but {height}x{width} needs {expected}")]
    BufferSize {
        height: usize,
        width: usize,
        expected: usize,
        actual: usize,
    },
    #[error("raster contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("map of {height}x{width} is smaller than the {min}x{min} kernel")]
    TooSmall {
        height: usize,
        width: usize,
        min: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid box ({x_min}, {y_min}, {x_max}, {y_max}): {reason}")]
    InvalidBox {
        x_min: i64,
        y_min: i64,
        x_max: i64,
        y_max: i64,
        reason: &'static str,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("image i/o: {0}")]
    Io(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CoreError {
    CoreError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
