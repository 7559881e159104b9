use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// A single violated field found while validating an experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of an operation.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: String, reason: String },

    /// Validation collected every offending field instead of stopping at the first.
    #[error("invalid experiment: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("global minimizer is not unique: {count} configurations share objective {value}")]
    AmbiguousMinimizer { count: usize, value: f64 },

    /// The requested operation is not meaningful for this input.
    #[error("refused: {0}")]
    Refused(String),

    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse `{path}`: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Validation(_) => "validation",
            Error::AmbiguousMinimizer { .. } => "ambiguous_minimizer",
            Error::Refused(_) => "refused",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Offending fields, if the error carries any.
    pub fn violations(&self) -> Vec<Violation> {
        match self {
            Error::Validation(v) => v.clone(),
            Error::Domain { field, reason } => vec![Violation::new(field.clone(), reason.clone())],
            _ => Vec::new(),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
