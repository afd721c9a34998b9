use thiserror::Error;

/// CLI failure classes, each with a distinct process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
            CliError::Parse(_) => 4,
            CliError::Solver(_) => 5,
        }
    }
}

impl From<lexirank::Error> for CliError {
    fn from(e: lexirank::Error) -> Self {
        match e {
            lexirank::Error::Diverged { .. }
            | lexirank::Error::StageDiverged { .. }
            | lexirank::Error::Overflow { .. } => CliError::Solver(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
