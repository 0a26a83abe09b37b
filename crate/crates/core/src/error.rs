use std::path::PathBuf;

use thiserror::Error;

use crate::harness::ExperimentReport;
use crate::penalties::SelectionRow;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The predicted number of error vectors exceeds the enumeration limit.
    #[error("enumeration infeasible: about {predicted:.3e} error vectors exceed the limit of {limit}")]
    EnumerationInfeasible { predicted: f64, limit: u64 },

    #[error("exact Rademacher average needs n <= {cap}, got n = {n}")]
    ExactCapExceeded { n: usize, cap: usize },

    #[error("{operation} is not supported for class {class}")]
    Unsupported {
        operation: &'static str,
        class: String,
    },

    #[error("shatter coefficient of {class} on {points} points overflows u128")]
    ShatterOverflow { class: String, points: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A per-class penalty failed; `partial` holds the rows computed before it.
    #[error("model selection failed at class {k}: {source}")]
    Selection {
        k: usize,
        partial: Vec<SelectionRow>,
        #[source]
        source: Box<Error>,
    },

    /// A replicate failed; `partial` aggregates the replicates preceding it.
    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        partial: Option<Box<ExperimentReport>>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
