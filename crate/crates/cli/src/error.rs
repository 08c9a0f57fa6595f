use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] spinweave::Error),
    #[error("target not reached: {0}")]
    TargetUnreached(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn in_file(path: &Path, source: spinweave::Error) -> Self {
        match source {
            spinweave::Error::Io(e) => Self::io(path, e),
            spinweave::Error::Parse { line, message } => {
                CliError::Usage(format!("{}:{line}: {message}", path.display()))
            }
            other => CliError::Usage(format!("{}: {other}", path.display())),
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for a missed target.
    pub fn exit_code(&self) -> ExitCode {
        use spinweave::Error as E;
        let code = match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::TargetUnreached(_) => 4,
            CliError::Core(e) => match e {
                E::NoConvergence { .. } | E::NonFinite { .. } | E::DegenerateData(_) => 3,
                _ => 2,
            },
        };
        ExitCode::from(code)
    }
}
