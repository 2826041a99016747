use std::path::PathBuf;

/// Failures of a subcommand, each mapped to a process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid configuration {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("malformed input {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("simulation halted: {0}")]
    Runtime(String),
    #[error("parameters not identifiable: {0}")]
    NotIdentifiable(String),
    #[error("feedback gains rejected: {0}")]
    NotHurwitz(String),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Config { .. } | CliError::Input { .. } => 2,
            CliError::Runtime(_) => 3,
            CliError::NotIdentifiable(_) => 4,
            CliError::NotHurwitz(_) => 5,
            CliError::Write { .. } => 1,
        }
    }

    pub fn config(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Config { path: path.into(), message: message.to_string() }
    }

    pub fn write(path: impl Into<PathBuf>, err: impl ToString) -> Self {
        CliError::Write { path: path.into(), message: err.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
