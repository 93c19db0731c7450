use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown chord symbol `{0}`")]
    UnknownChord(String),

    #[error("corpus format error at line {line}: {message}")]
    CorpusFormat { line: usize, message: String },

    #[error("corpus contains no songs")]
    EmptyCorpus,

    #[error("chord {chord} has no outgoing transitions and smoothing is disabled")]
    DegenerateRow { chord: String },

    #[error("transition {from} -> {to} has zero probability")]
    ZeroProbabilityTransition { from: String, to: String },

    #[error("model version mismatch: {0}")]
    VersionMismatch(String),

    #[error("model checksum error: {0}")]
    Checksum(String),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile format error at line {line}: {message}")]
    ProfileFormat { line: usize, message: String },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("agent {0} is not assigned to any section")]
    UnassignedAgent(usize),

    #[error("search space of {needed} candidates exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("sequence of length {len} is too short (need more than {min})")]
    SequenceTooShort { len: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
