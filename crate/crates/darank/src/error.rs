use std::path::PathBuf;

use darank_core::generation::GenerationError;
use darank_core::ScorerError;
use thiserror::Error;

use crate::corpus::CorpusError;

/// Process exit status per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Other = 1,
    Config = 2,
    Generation = 3,
    Scoring = 4,
    Io = 5,
}

#[derive(Debug, Error)]
pub enum DarankError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("item {item}: {message}")]
    Prompt { item: String, message: String },
    #[error("item {item}: generation failed: {source}")]
    Generation {
        item: String,
        #[source]
        source: GenerationError,
    },
    #[error("item {item}: scoring failed: {source}")]
    Scoring {
        item: String,
        #[source]
        source: ScorerError,
    },
    #[error("scorer preflight: {0}")]
    Preflight(#[source] ScorerError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Other(String),
}

impl DarankError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DarankError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            DarankError::Config(_) | DarankError::Prompt { .. } => ExitCode::Config,
            DarankError::Corpus(CorpusError::Io { .. }) => ExitCode::Io,
            DarankError::Corpus(_) => ExitCode::Config,
            DarankError::Generation { .. } => ExitCode::Generation,
            DarankError::Scoring { .. } | DarankError::Preflight(_) => ExitCode::Scoring,
            DarankError::Io { .. } | DarankError::Format { .. } => ExitCode::Io,
            DarankError::Other(_) => ExitCode::Other,
        }
    }
}
