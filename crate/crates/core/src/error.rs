use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} in dimension {dim}")]
    NonFinite { dim: usize, value: f64 },

    #[error("dimension index {dim} out of range for {d} dimensions")]
    DimensionOutOfRange { dim: usize, d: usize },

    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown label column {0:?}")]
    UnknownLabelColumn(String),

    #[error("empty sample")]
    EmptySample,

    #[error("subspace must have at least {required} dimensions, got {got}")]
    SubspaceTooSmall { required: usize, got: usize },

    #[error("window holds {got} observations, {required} required")]
    WindowTooSmall { required: usize, got: usize },

    #[error("selection size {plays} out of range for {d} arms")]
    PlaysOutOfRange { plays: usize, d: usize },

    #[error("neighborhood size {k} must be positive and smaller than {n} points")]
    BadNeighborhood { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stream ended after {got} observations, window size {required} never filled")]
    StreamTooShort { required: usize, got: usize },

    #[error("snapshots do not align with the input stream: {0}")]
    Misaligned(String),

    #[error("labels required but not present")]
    MissingLabels,

    #[error("ranking metrics need both classes, got {0}")]
    DegenerateLabels(String),
}

pub type Result<T> = std::result::Result<T, Error>;
