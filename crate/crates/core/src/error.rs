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

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("adjective '{adjective}' appears in aspect '{aspect}' and in aspect '{other}'")]
    DuplicateAdjective {
        adjective: String,
        aspect: String,
        other: String,
    },

    #[error("aspect '{aspect}' has an empty {side} side")]
    EmptySide { aspect: String, side: &'static str },

    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),

    #[error("unknown adjective '{0}'")]
    UnknownAdjective(String),

    #[error("unknown aspect '{0}'")]
    UnknownAspect(String),

    #[error("unknown noun '{0}'")]
    UnknownNoun(String),

    #[error("record '{id}': {message}")]
    InvalidRecord { id: String, message: String },

    #[error("duplicate record id '{0}'")]
    DuplicateId(String),

    #[error("no embedding for record '{0}'")]
    MissingEmbedding(String),

    #[error("dimension mismatch for '{context}': expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("label {label} out of range for {len} classes")]
    LabelOutOfRange { label: usize, len: usize },

    #[error("context vector is not one-hot")]
    NotOneHot,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("no training rows for combination noun '{noun}'{}", aspect.as_ref().map(|a| format!(", aspect '{a}'")).unwrap_or_default())]
    UntrainableCombination {
        noun: String,
        aspect: Option<String>,
    },

    #[error("no applicable label survives filtering ({0})")]
    NoApplicableLabel(String),

    #[error("prediction set is empty")]
    EmptyPredictionSet,

    #[error("prediction set row '{0}' lacks a required prediction")]
    MissingPrediction(String),

    #[error("holdout combination ({noun}, {aspect}) is absent from the dataset")]
    HoldoutAbsent { noun: String, aspect: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("task mismatch: model was trained for {expected}, asked for {found}")]
    TaskMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl ToString) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.to_string(),
        }
    }

    /// True for failures of the numeric machinery rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
