//! One error type for every stage, each variant mapping to a stable
//! category token. Failures print as a single line
//! `error[category]: message` so scripts can dispatch on the category.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Format(String),
    #[error("missing {missing}; run `palscreen {produced_by}` first")]
    StageOrder {
        missing: PathBuf,
        produced_by: &'static str,
    },
    #[error(
        "checkpoint was trained against vocabulary {expected}, but {path} hashes to {actual}"
    )]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("patient {0:?} is not in the cohort")]
    UnknownPatient(String),
    #[error("{0}")]
    Train(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Format(_) => "format",
            CliError::StageOrder { .. } => "stage_order",
            CliError::ChecksumMismatch { .. } => "checksum_mismatch",
            CliError::UnknownPatient(_) => "unknown_patient",
            CliError::Train(_) => "train",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            message: source.to_string(),
        }
    }
}

/// Render on one line even if an inner message contains newlines.
pub fn one_line(e: &CliError) -> String {
    format!("error[{}]: {}", e.category(), e).replace('\n', " ")
}
