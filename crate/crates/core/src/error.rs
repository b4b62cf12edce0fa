//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, differentiation and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("shape mismatch at layer {layer}: expected {expected}, got {got}")]
    ShapeMismatch {
        layer: usize,
        expected: String,
        got: String,
    },

    #[error("layer index out of range: {index} (valid {valid})")]
    LayerIndexOutOfRange { index: String, valid: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {dim} above configured net cap {cap}")]
    DimensionAboveCap { dim: usize, cap: usize },

    #[error("matrix not symmetric: max asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("oracle not applicable: {0}")]
    OracleMismatch(String),

    #[error("unknown theorem id: {0}")]
    UnknownTheorem(String),

    #[error("unknown constant name: {0}")]
    UnknownConstant(String),

    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("corrupt dataset file: {0}")]
    CorruptFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
