use std::fmt;

use sea_core::SeaError;

/// Failure of a command, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration (exit 2).
    Config(String),
    /// The numerics failed during a run (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
        }
    }

    pub fn config(field: &str, err: impl fmt::Display) -> Self {
        Self::Config(format!("{field}: {err}"))
    }

    /// Classifies an engine error raised while running a valid configuration.
    pub fn run(err: SeaError) -> Self {
        match err {
            SeaError::PositivityBlowUp { .. }
            | SeaError::TraceDeviation { .. }
            | SeaError::EigenFailure { .. }
            | SeaError::DegenerateHamiltonian { .. }
            | SeaError::StepSizeUnderflow { .. }
            | SeaError::MaxStepsExceeded { .. }
            | SeaError::InvalidState(_) => Self::Numeric(err.to_string()),
            other => Self::Config(other.to_string()),
        }
    }

    pub fn io(what: &str, err: std::io::Error) -> Self {
        Self::Numeric(format!("{what}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "configuration error: {msg}"),
            Self::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
