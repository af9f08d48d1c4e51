use thiserror::Error;

use crate::law::FamilyParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameters for family `{family}`: {reason}")]
    InvalidParams { family: String, reason: String },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid preference vector: {0}")]
    InvalidPreference(String),

    #[error("invalid run record `{run_id}`: {reason}")]
    InvalidRecord { run_id: String, reason: String },

    #[error("family sets do not match: expected {expected:?}, found {found:?}")]
    FamilyMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient coverage for family `{family}`: need at least {required} distinct {axis} values, found {found}")]
    InsufficientCoverage {
        family: String,
        axis: &'static str,
        required: usize,
        found: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit did not converge after {iterations} iterations (best objective {objective:e})")]
    NonConvergence {
        best: Box<FamilyParams>,
        objective: f64,
        iterations: usize,
    },

    #[error("insufficient replication: {0}")]
    InsufficientReplication(String),

    #[error("insufficient variation: {0}")]
    InsufficientVariation(String),

    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),

    #[error("infeasible caps in family `{family}`: caps sum to {total} < 1 over all languages")]
    InfeasibleCaps { family: String, total: f64 },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonConvergence { .. } | Error::Degenerate(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn parse(err: &serde_json::Error, line_offset: usize) -> Self {
        Error::Parse {
            line: err.line() + line_offset,
            column: err.column(),
            message: strip_location(&err.to_string()),
        }
    }
}

// serde_json appends "at line X column Y"; the caller reports its own position.
fn strip_location(msg: &str) -> String {
    match msg.rsplit_once(" at line ") {
        Some((head, _)) => head.to_string(),
        None => msg.to_string(),
    }
}
