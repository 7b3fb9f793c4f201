use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = TexlabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TexlabError {
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl TexlabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TexlabError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        TexlabError::Argument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        TexlabError::Format(msg.into())
    }

    /// Process exit code for the command line tool: 1 for I/O and format
    /// problems, 2 for violated training/configuration contracts.
    pub fn exit_code(&self) -> i32 {
        match self {
            TexlabError::Format(_) | TexlabError::Io { .. } => 1,
            TexlabError::Argument(_) | TexlabError::Training(_) | TexlabError::Config(_) => 2,
        }
    }
}
