use std::fmt;

use payscheme_core::Error;

/// Exit code for malformed input or arguments.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for infeasible programs and failed verification.
pub const EXIT_REJECTED: i32 = 1;
/// Exit code for solver breakdowns.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Io { path: String, source: std::io::Error },
    Json { what: String, source: serde_json::Error },
    Input(String),
    Core(Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Json { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                Error::Infeasible(_) | Error::TargetNotImplementable { .. } => EXIT_REJECTED,
                Error::NumericalBreakdown(_) => EXIT_NUMERICAL,
                _ => EXIT_INPUT,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Json { what, source } => write!(f, "{what}: {source}"),
            CliError::Input(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Json { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
