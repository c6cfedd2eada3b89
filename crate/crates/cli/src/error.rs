use std::fmt;
use std::process::ExitCode;

use las_core::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid prior / run configuration.
    Usage(String),
    /// Unreadable or malformed input, or an unwritable output.
    Io(String),
    /// A numerical routine failed to converge or a chain broke down.
    Convergence(String),
    /// The command ran but its check failed (normconst bracket miss).
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Convergence(_) => 4,
        })
    }

    /// Classifies a core error raised while validating inputs.
    pub fn from_setup(e: Error) -> Self {
        match e {
            Error::Io(m) | Error::InvalidInput(m) => CliError::Io(m),
            Error::Convergence { .. } => CliError::Convergence(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }

    /// Classifies a core error raised after validation, while computing.
    pub fn from_run(e: Error) -> Self {
        match e {
            Error::Io(m) => CliError::Io(m),
            other => CliError::Convergence(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Convergence(m) => write!(f, "convergence error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
