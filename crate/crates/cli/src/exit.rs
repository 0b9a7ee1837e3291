use std::fmt;
use std::process::ExitCode;

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or unwritable files, missing or malformed datasets.
    Io(String),
    /// Configuration validation.
    Config(String),
    /// A numeric check exceeded its tolerance.
    Tolerance(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn code(&self) -> ExitCode {
        match self {
            CliError::Io(_) => ExitCode::from(1),
            CliError::Config(_) => ExitCode::from(2),
            CliError::Tolerance(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Tolerance(m) => f.write_str(m),
        }
    }
}

impl From<stq_core::Error> for CliError {
    fn from(e: stq_core::Error) -> Self {
        match e {
            stq_core::Error::Config { .. } => CliError::Config(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
