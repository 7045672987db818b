use std::path::PathBuf;

/// Errors produced by the extraction and modeling primitives.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed volume header: {0}")]
    MalformedHeader(String),
    #[error("payload size mismatch: header declares {expected} values, payload holds {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite value at linear index {0}")]
    NonFinite(usize),
    #[error("empty ROI mask")]
    EmptyRoi,
    #[error("resampling produced an empty ROI (target spacing {0} mm)")]
    DegenerateRoi(f64),
    #[error("volume/mask geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("constant input where variation is required: {0}")]
    ConstantInput(String),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("no permissible pairs for concordance")]
    NoPermissiblePairs,
    #[error("model fit failed: {0}")]
    FitFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
