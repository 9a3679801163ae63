use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema violation: {0}")]
    SchemaViolation(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("lambda out of range: {0} (expected 0 <= lambda <= 1)")]
    InvalidLambda(f64),

    #[error("position {position} out of range (searchable positions are 1..={max})")]
    PositionOutOfRange { position: usize, max: usize },

    #[error("candidate {candidate} out of range at position {position} (K = {available})")]
    CandidateOutOfRange {
        position: usize,
        candidate: usize,
        available: usize,
    },

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("invalid search settings: {0}")]
    InvalidSettings(String),

    #[error("sample {sample} out of range (M = {count})")]
    SampleOutOfRange { sample: usize, count: usize },

    #[error("config store is empty")]
    EmptyStore,

    #[error("no stored configuration satisfies {request}; nearest miss is lambda={nearest_lambda} (A={nearest_a}, C={nearest_c})")]
    Infeasible {
        request: String,
        nearest_lambda: f64,
        nearest_a: f64,
        nearest_c: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.into())
        } else {
            Error::Io {
                path: path.into(),
                source,
            }
        }
    }
}
