use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid factor space: {0}")]
    FactorSpace(String),

    #[error("unknown {dimension} value id `{id}`")]
    UnknownValue { dimension: String, id: String },

    #[error("invalid planner configuration: {0}")]
    Planner(String),

    #[error("no leak-free few-shot set for instance `{instance}`")]
    Leakage { instance: String },

    #[error("invalid prompt input: {0}")]
    Prompt(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("invalid outcome tensor: {0}")]
    Outcome(String),

    #[error("invalid model profile: {0}")]
    Profile(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("statistical precondition unmet: {0}")]
    Precondition(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
