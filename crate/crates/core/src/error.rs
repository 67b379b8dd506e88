//! Error type shared by all simulator modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemcomError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("insufficient training data: {have} vectors for {want} entries")]
    InsufficientTrainingData { have: usize, want: usize },

    #[error("invalid quantizer range: min {min} must be below max {max}")]
    InvalidRange { min: f64, max: f64 },

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("invalid pilot spacing: {0}")]
    InvalidSpacing(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("degenerate pilot lattice: {0}")]
    DegenerateLattice(String),

    #[error("pilot symbol must be nonzero")]
    ZeroPilot,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("bad file format: {0}")]
    BadFileFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
