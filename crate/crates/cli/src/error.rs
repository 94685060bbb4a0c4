//! Shared error taxonomy and its exit-code mapping.

use std::io;
use std::process::ExitCode;

/// Exit codes: 0 success, 2 schema or validation failure, 3 I/O failure,
/// 4 infeasible configuration.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: line {line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("{subject}: {message}")]
    Validation { subject: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn schema(path: &str, line: usize, message: impl ToString) -> CliError {
        CliError::Schema { path: path.to_string(), line, message: message.to_string() }
    }

    pub fn validation(subject: &str, message: impl ToString) -> CliError {
        CliError::Validation { subject: subject.to_string(), message: message.to_string() }
    }

    pub fn io(path: &str, source: io::Error) -> CliError {
        CliError::Io { path: path.to_string(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Schema { .. } | CliError::Validation { .. } => ExitCode::from(2),
            CliError::Io { .. } => ExitCode::from(3),
            CliError::Infeasible(_) => ExitCode::from(4),
        }
    }
}
