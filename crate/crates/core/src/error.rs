use std::path::PathBuf;

/// Errors produced by the ranking, fusion and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed line in an input file. `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two inputs that must describe the same nouns or candidate pool do not.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// A required score, record or embedding is absent.
    #[error("missing: {0}")]
    Missing(String),

    #[error("no concreteness score for '{0}'")]
    NoConcreteness(String),

    #[error("word '{0}' has no embedding")]
    OutOfVocabulary(String),

    /// The regularized normal equations could not be factorized.
    #[error("degenerate regression problem: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
