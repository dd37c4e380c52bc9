use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller asked for something invalid (bad parameter, bad flag value).
    Usage,
    /// The input data or a file on disk could not be used.
    Data,
    /// Anything else.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown target column `{0}`")]
    UnknownColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}, column `{column}`: non-finite value")]
    NonFinite { row: usize, column: String },

    #[error("row {row}: target {value} must be positive for a log transform")]
    NonPositiveTarget { row: usize, value: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no feature columns")]
    NoFeatures,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u64, expected: u64 },

    #[error("node has {n} points, oracle is limited to {limit}")]
    OracleTooLarge { n: usize, limit: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParam(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::UnknownColumn(_)
            | Error::UnparseableCell { .. }
            | Error::MissingValue { .. }
            | Error::NonFinite { .. }
            | Error::NonPositiveTarget { .. }
            | Error::EmptyDataset
            | Error::NoFeatures
            | Error::Shape(_)
            | Error::FormatVersion { .. } => ErrorKind::Data,
            Error::OracleTooLarge { .. } => ErrorKind::Internal,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}
