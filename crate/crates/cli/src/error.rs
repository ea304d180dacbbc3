use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(unirig::Error),
}

impl From<unirig::Error> for CliError {
    fn from(e: unirig::Error) -> Self {
        match e {
            unirig::Error::Io(source) => Self::Io { path: "<unknown>".into(), source },
            other => Self::Core(other),
        }
    }
}

impl CliError {
    /// 2 for bad arguments or inputs, 3 for I/O, 4 for optimizer failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Io { .. } => 3,
            Self::Core(unirig::Error::Optimizer(_)) => 4,
            Self::Core(unirig::Error::Io(_)) => 3,
            Self::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches the path to I/O failures of a library call.
pub fn at<T>(path: &Path, r: unirig::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        unirig::Error::Io(source) => CliError::Io { path: path.display().to_string(), source },
        other => CliError::Core(other),
    })
}

pub fn io_at<T>(path: &Path, r: std::io::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
