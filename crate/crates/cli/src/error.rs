use std::path::PathBuf;

use smw_core::SmwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] SmwError),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 parse/dimension/usage, 3 singular base, 4 singular capacitance,
    /// 5 failed check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Io { .. } | Self::Usage(_) => 2,
            Self::CheckFailed(_) => 5,
            Self::Core(e) => match e {
                SmwError::DimensionMismatch(_)
                | SmwError::NonFiniteInput(_)
                | SmwError::EmptyMatrix { .. }
                | SmwError::EmptyUpdates
                | SmwError::InvalidSpec(_) => 2,
                SmwError::SingularBase { .. } => 3,
                SmwError::SingularCapacitance { .. } | SmwError::SingularTotal { .. } => 4,
                SmwError::OracleFailure(_) | SmwError::GenerationFailure { .. } => 1,
            },
        }
    }
}
