use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("spectrum has zero area")]
    ZeroArea,

    #[error("spectrum has negative area ({0})")]
    NegativeArea(f64),

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("negative rate {0}")]
    NegativeRate(f64),

    #[error("non-positive gain {value} at index {index}")]
    NonPositiveGain { index: usize, value: f64 },

    #[error("zero radiance at index {0}")]
    ZeroRadiance(usize),

    #[error("insufficient frames: need at least 2, got {0}")]
    InsufficientFrames(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("flat raman spectrum: no positive peak to scale")]
    FlatRaman,

    #[error("window of {window} points does not fit a spectrum of {len} points")]
    WindowTooLarge { window: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid decomposition level {level} (max {max})")]
    InvalidLevel { level: usize, max: usize },

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: shape mismatch: {msg}")]
    ShapeMismatch { path: PathBuf, msg: String },

    #[error("external tool failed: {0}")]
    ExternalTool(String),

    #[error("denoiser failed on {context}: {source}")]
    Denoiser {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 validation, 2 I/O, 3 external tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::ExternalTool(_) | Error::ShapeMismatch { .. } => 3,
            Error::Denoiser { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
