use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("unsupported image {path}: {reason}")]
    Unsupported { path: PathBuf, reason: String },
    #[error("image dimensions {width}x{height} overflow")]
    DimensionOverflow { width: u64, height: u64 },
    #[error("pixel {value} at index {index} is outside [0, 255]")]
    PixelRange { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("svd did not converge within {max_iterations} sweeps")]
    SvdNonConvergence { max_iterations: usize },
    #[error("calibration range has zero width (all coefficients equal {0})")]
    ZeroWidthRange(f64),
    #[error("invalid calibration profile: {0}")]
    Profile(String),
    #[error("no parameters for illumination level {0}")]
    MissingLevel(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("duplicate image path in manifest: {0}")]
    DuplicatePath(PathBuf),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("feature extraction failed for {path}: {source}")]
    Extraction {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid report: {0}")]
    Report(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
