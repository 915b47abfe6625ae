use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("`{field}` is off the simplex (max deviation {deviation:e})")]
    SimplexViolation { field: String, deviation: f64 },

    #[error("invalid value in `{field}`: {reason}")]
    InvalidValue { field: String, reason: String },

    #[error(
        "cut-points for group {group}, subpopulation {subpop} are not strictly increasing within [1, {max}]: {cuts:?}"
    )]
    NonMonotoneCutpoints {
        group: usize,
        subpop: usize,
        max: usize,
        cuts: Vec<usize>,
    },

    #[error("enumeration of {size} configurations exceeds the guard of {limit}")]
    GuardExceeded { size: u128, limit: u128 },

    #[error("contingency table is empty")]
    EmptyTable,

    #[error("need at least {required} posterior draws, found {found}")]
    InsufficientDraws { required: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("infeasible model dimensions: {0}")]
    InfeasibleDims(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("{path}: duplicate row for subject {subject}, item {item}, visit {visit} (lines {first} and {second})")]
    DuplicateRow {
        path: PathBuf,
        subject: usize,
        item: usize,
        visit: usize,
        first: u64,
        second: u64,
    },

    #[error("{path}: subject {subject} is missing item {item} at visit {visit} (subject has {visits} visits; rows for this subject start at line {line})")]
    RaggedMissing {
        path: PathBuf,
        subject: usize,
        item: usize,
        visit: usize,
        visits: usize,
        line: u64,
    },

    #[error("checksum mismatch in {path}: manifest says {expected}, content hashes to {found}")]
    Checksum {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}: manifest disagrees with stored data: {reason}")]
    ManifestDims { path: PathBuf, reason: String },

    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn dims(field: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            field: field.into(),
            expected,
            found,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse failure category, used as the process exit code by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InfeasibleDims(_) => 2,
            Error::HeaderMismatch { .. }
            | Error::Parse { .. }
            | Error::DuplicateRow { .. }
            | Error::RaggedMissing { .. } => 3,
            Error::DimensionMismatch { .. }
            | Error::SimplexViolation { .. }
            | Error::InvalidValue { .. }
            | Error::NonMonotoneCutpoints { .. }
            | Error::GuardExceeded { .. }
            | Error::EmptyTable
            | Error::InsufficientDraws { .. }
            | Error::LengthMismatch { .. } => 4,
            Error::Checksum { .. } | Error::ManifestDims { .. } => 5,
            Error::Io { .. } | Error::Serialize(_) => 6,
            Error::Replicate { source, .. } => source.exit_code(),
        }
    }

    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "data",
            4 => "model",
            5 => "integrity",
            _ => "io",
        }
    }
}
