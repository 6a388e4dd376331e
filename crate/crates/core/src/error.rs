use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("belief level {alpha} is not reachable by any finite interval")]
    UnreachableLevel { alpha: f64 },

    #[error("time interval has negative lower bound {lo}")]
    NegativeTime { lo: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no comparable pairs for concordance")]
    NoComparablePairs,

    #[error("evaluation grid has zero span")]
    DegenerateGrid,

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("non-positive duration at data row {row}")]
    NonPositiveDuration { row: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the input data rather than by the numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::TooFewSamples { .. }
                | Error::EmptyDataset
                | Error::FileNotFound(_)
                | Error::SchemaMismatch(_)
                | Error::NonPositiveDuration { .. }
                | Error::NegativeTime { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
