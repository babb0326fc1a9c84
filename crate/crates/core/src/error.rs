use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("empty document id at line {line}")]
    EmptyId { line: usize },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("hashtag {0:?} has no community in the partition")]
    MissingNode(String),

    #[error("document {doc} carries label {label} but k = {k}")]
    LabelOutOfRange { doc: String, label: usize, k: usize },

    #[error("cannot reach target ratio {target}: no labeled documents")]
    UnreachableRatio { target: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite objective at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("no document has exactly one reference label")]
    NoSingleLabel,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
