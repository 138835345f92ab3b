use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum IqaError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("degenerate input: joint intensity range is zero")]
    DegenerateInput,
    #[error("pixel value {value} at index {index} lies outside [0, 1]; normalize the pair jointly first")]
    NotNormalized { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image {width}x{height} too small: {reason}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("sensitivity undefined: baseline score {0} leaves no headroom below 1")]
    UndefinedSensitivity(f64),
    #[error("empty report")]
    EmptyReport,
    #[error("unknown {kind}: {value}")]
    Unknown { kind: &'static str, value: String },
}

pub type Result<T> = std::result::Result<T, IqaError>;
