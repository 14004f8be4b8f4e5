use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at channel {channel}, index {index}")]
    NonFinite { channel: usize, index: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("sample is unlabeled")]
    Unlabeled,

    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid kernel size {0}: must be odd and >= 1")]
    InvalidKernel(usize),

    #[error("invalid adaptive block size {0}: must be odd and >= 3")]
    InvalidBlock(usize),

    #[error("invalid thresholds (low {low}, high {high}): need 0 <= low < high <= 255")]
    InvalidThresholds { low: f64, high: f64 },

    #[error("image {height}x{width} too small: need at least 3x3")]
    ImageTooSmall { height: usize, width: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("{}: bad format at offset {offset}: {msg}", path.display())]
    Format { path: PathBuf, offset: u64, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            msg: msg.into(),
        }
    }

    /// True for errors caused by configuration rather than by input data.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidConfig(_)
                | Error::InvalidKernel(_)
                | Error::InvalidBlock(_)
                | Error::InvalidThresholds { .. }
        )
    }
}
