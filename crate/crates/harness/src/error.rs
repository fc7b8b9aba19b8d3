use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(#[from] polent::Error),
    #[error("oracle check failed: {0}")]
    Oracle(String),
    #[error("acceptance failure: {0}")]
    Acceptance(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 numerical or oracle, 4 acceptance, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Model(_) | Self::Oracle(_) => 3,
            Self::Acceptance(_) => 4,
            Self::Io { .. } | Self::Format(_) => 1,
        }
    }
}
