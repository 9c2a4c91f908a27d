//! Crate-wide error type. Dense linear algebra has its own
//! [`LinalgError`](crate::linalg::LinalgError) which converts into this one.

use std::fmt;
use std::io;

use crate::linalg::LinalgError;

/// Errors produced by dataset handling, training, evaluation, and model I/O.
#[derive(Debug)]
pub enum Error {
    /// A linear-algebra kernel failed (factorization, eigensolver, shapes).
    Linalg(LinalgError),
    /// File could not be read or written.
    Io(io::Error),
    /// A data file could not be parsed. `line` and `col` are 1-based.
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    /// Fewer than two distinct classes in the input data.
    TooFewClasses { found: usize },
    /// Requested fold count is outside `2..=m`.
    BadFoldCount { folds: usize, samples: usize },
    /// Invalid generator or command parameters.
    BadParams(String),
    /// A class (1-based) has no samples.
    EmptyClass { class: usize },
    /// Invalid solver configuration.
    BadConfig(String),
    /// Label outside `1..=K`.
    BadLabel { label: usize, classes: usize },
    /// Vector/matrix extent does not match the model or dataset.
    DimensionMismatch { expected: usize, found: usize },
    /// A solver-internal contract was violated (factorization failure,
    /// stationarity or descent check); signals corrupted input.
    NumericalFailure(String),
    /// Two paired sequences have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// Paired test needs at least two folds.
    TooFewFolds { folds: usize },
    /// A trainer failed inside cross-validation; carries the fold index.
    CvFold { fold: usize, source: Box<Error> },
    /// A model file is malformed. `line` is 1-based.
    ModelFormat { line: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Linalg(e) => write!(f, "{e}"),
            Error::Io(e) => write!(f, "{e}"),
            Error::Parse { line, col, msg } => {
                write!(f, "parse error at row {line} col {col}: {msg}")
            }
            Error::TooFewClasses { found } => {
                write!(f, "need at least 2 classes, found {found}")
            }
            Error::BadFoldCount { folds, samples } => {
                write!(f, "fold count {folds} not in 2..={samples}")
            }
            Error::BadParams(msg) => write!(f, "bad parameters: {msg}"),
            Error::EmptyClass { class } => write!(f, "class {class} has no samples"),
            Error::BadConfig(msg) => write!(f, "bad config: {msg}"),
            Error::BadLabel { label, classes } => {
                write!(f, "label {label} outside 1..={classes}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::TooFewFolds { folds } => {
                write!(f, "need at least 2 folds, got {folds}")
            }
            Error::CvFold { fold, source } => write!(f, "fold {fold}: {source}"),
            Error::ModelFormat { line, msg } => {
                write!(f, "model file line {line}: {msg}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Linalg(e) => Some(e),
            Error::Io(e) => Some(e),
            Error::CvFold { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<LinalgError> for Error {
    fn from(e: LinalgError) -> Self {
        Error::Linalg(e)
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
