use std::path::PathBuf;

/// Errors surfaced by the commands. [`CliError::exit_code`] maps them to the
/// process exit status: 1 for bad input, 2 for internal failures.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("invalid input: {0}")]
    Core(#[from] spotrot_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Input { .. } | CliError::Core(_) => 1,
            CliError::Io { .. } | CliError::Internal(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn input(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::Input { path: path.into(), msg: msg.into() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
