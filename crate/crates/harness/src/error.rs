use std::path::PathBuf;

use dissipa_core::Error as CoreError;

/// Exit code for bad input: configuration, CLI usage, incompatible runs.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code for failures while a solver runs or output is written.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("missing required key {0}")]
    Missing(String),
    #[error("runs are not comparable; differing keys: {}", .0.join(", "))]
    Incompatible(Vec<String>),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("solver failed: {0}")]
    Solver(#[from] CoreError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. }
            | HarnessError::Invalid { .. }
            | HarnessError::Missing(_)
            | HarnessError::Incompatible(_)
            | HarnessError::Read { .. }
            | HarnessError::Csv { .. }
            | HarnessError::Usage(_) => EXIT_VALIDATION,
            HarnessError::Write { .. } | HarnessError::Solver(_) => EXIT_RUNTIME,
        }
    }

    /// Attach a configuration key to a validation failure from the core crate.
    pub(crate) fn invalid(key: &str, err: CoreError) -> Self {
        let message = match err {
            CoreError::InvalidParameter { message, .. } => message,
            other => other.to_string(),
        };
        HarnessError::Invalid {
            key: key.to_string(),
            message,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
