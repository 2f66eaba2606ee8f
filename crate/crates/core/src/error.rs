use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the identification and compensation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kinematic model: {0}")]
    InvalidModel(String),

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: usize, valid: String },

    #[error("joint {joint} value {value} outside limits [{lo}, {hi}]")]
    OutOfLimits { joint: usize, value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ill-conditioned probe set: rank {found} below reference rank {reference}")]
    IllConditionedProbes { found: usize, reference: usize },

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("identifiability failure{}: {detail}", joint_label(*.joint))]
    Identifiability { joint: Option<usize>, detail: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("simulation diverged at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

fn joint_label(joint: Option<usize>) -> String {
    match joint {
        Some(j) => format!(" at joint {}", j + 1),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
