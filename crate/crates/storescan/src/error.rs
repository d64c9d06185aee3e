use std::io;
use std::path::PathBuf;

use storescan_core::smali::DuplicateClass;
use storescan_core::{ConfigError, RuleError};

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: not a directory", .0.display())]
    NotADirectory(PathBuf),
    #[error(transparent)]
    DuplicateClass(#[from] DuplicateClass),
    #[error("{}: {source}", path.display())]
    Rules {
        path: PathBuf,
        #[source]
        source: RuleError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl ScanError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        ScanError::Io {
            path: path.into(),
            source,
        }
    }
}
