use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },

    #[error("duplicate record for subject {subject} on {date}")]
    DuplicateDay { subject: String, date: NaiveDate },

    #[error("PHQ-2 label {value} at line {line} is outside 0-12")]
    OutOfRangeLabel { line: u64, value: i64 },

    #[error("unparseable date {text:?} at line {line}")]
    UnparseableDate { line: u64, text: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series for subject {0} has no day with an available feature vector")]
    EmptySeries(String),

    #[error("design matrix is empty")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no rows pass the label filter")]
    NoRows,

    #[error("lag must be within 1..=7, got {0}")]
    InvalidLag(usize),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("max_split_features {requested} exceeds the {available} available columns")]
    InvalidMaxFeatures { requested: usize, available: usize },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("SVR solver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("need at least {needed} rows for grid search, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("need at least 2 subjects with retained labels, got {0}")]
    InsufficientSubjects(usize),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::MalformedCsv {
                line,
                reason: format!("{other:?}"),
            },
        }
    }
}
