use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Config,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("non-numeric or non-finite measurement cells in rows {rows:?}")]
    NonNumericRows { rows: Vec<usize> },

    #[error("label at row {row} is {value:?}, expected 0 or 1")]
    LabelNotBinary { row: usize, value: String },

    #[error("duplicate object id {0}")]
    DuplicateId(u64),

    #[error("column {0:?} not found")]
    UnknownColumn(String),

    #[error("column index {index} out of range for {n} columns")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no positive objects")]
    NoPositives,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("truth vector contains a single class; kappa is undefined")]
    SingleClassTruth,

    #[error("no positive objects outside the training set")]
    NoPositivesOutsideTraining,

    #[error("gini coefficient undefined for all-zero input")]
    AllZero,

    #[error("curve has no points")]
    EmptyCurve,

    #[error("malformed curve file at line {line}: {msg}")]
    MalformedCurve { line: usize, msg: String },

    #[error("{failed} of {total} sweep cells failed; first {first}")]
    PartialFailure {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownColumn(_) | Error::IndexOutOfRange { .. } => {
                ErrorClass::Config
            }
            Error::Invariant(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }
}
