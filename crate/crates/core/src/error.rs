//! Crate-wide error type.
//!
//! Each variant corresponds to one error class surfaced by the CLI as a
//! distinct exit code, so keep the set stable.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} ({context}): {message}")]
    Parse {
        path: String,
        context: String,
        message: String,
    },

    #[error("unknown landmark name {name:?}")]
    UnknownLandmark { name: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("empty segmentation: mask contains no foreground voxels")]
    EmptySegmentation,

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("singular system: {0} (try a plausibility weight w_p > 0)")]
    SingularSystem(String),

    #[error("insufficient landmarks for plane(s): {planes:?}")]
    InsufficientLandmarks { planes: Vec<String> },

    #[error("plane fit failed to converge in any restart (best residual {best_residual})")]
    FitFailure { best_residual: f64 },

    #[error("normal orientation undetermined for plane {plane}: no orientation landmark visible")]
    OrientationUndetermined { plane: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn parse(
        path: impl AsRef<std::path::Path>,
        context: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            context: context.into(),
            message: message.into(),
        }
    }
}
