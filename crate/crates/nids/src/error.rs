use std::path::PathBuf;

use nids_core::classifier::ClassifierError;
use nids_core::consensus::PhaseError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Dataset {
        path: PathBuf,
        #[source]
        source: ClassifierError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("phase {phase}: {source}")]
    Phase {
        phase: usize,
        #[source]
        source: PhaseError,
    },
    #[error("{aborted} of {phases} phases aborted, more than the 5% allowed")]
    TooManyAborts { aborted: usize, phases: usize },
}

impl HarnessError {
    /// Process exit code: 1 for bad input or configuration, 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
