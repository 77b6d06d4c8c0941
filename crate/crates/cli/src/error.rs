use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fqaoa::Error),

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    pub fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Self {
        let path = path.into();
        move |source| Self::Csv { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        use fqaoa::Error as E;
        match self {
            Self::Core(E::Certification { .. }) => EXIT_CERTIFICATION,
            Self::Core(E::NonFinite(_) | E::Pathology(_)) => EXIT_NUMERICAL,
            Self::Core(E::Io(_)) | Self::Io { .. } | Self::Csv { .. } => EXIT_IO,
            Self::Core(_) | Self::Config(_) => EXIT_CONFIG,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
