use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, VerifyError>;

/// Failures that stop a run. Check failures are recorded in the report
/// instead.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("config parse error{}: {message}", location.map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    Parse { location: Option<(usize, usize)>, message: String },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing the report: {0}")]
    Output(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Library { context: String, source: qkz::Error },
    #[error("serializing the report: {0}")]
    Json(#[from] serde_json::Error),
}

impl VerifyError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        VerifyError::Invalid { field, reason: reason.into() }
    }
}

/// Attach a description of the failing step to a library error.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for qkz::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| VerifyError::Library { context: what(), source })
    }
}
