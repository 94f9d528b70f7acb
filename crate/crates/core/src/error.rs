use std::path::PathBuf;

/// Errors raised by the evaluation engine.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("manifest validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("could not decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("could not encode image: {0}")]
    Encode(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("AUC is undefined: the ground truth contains a single class")]
    UndefinedAuc,

    #[error("no valid pixels were counted")]
    EmptyCounts,

    #[error("missing predictions for {} sample(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("could not decode {} image(s): {}", .0.len(), .0.join("; "))]
    DecodeFailures(Vec<String>),

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("item {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {id}: {source}")]
    Sample {
        id: String,
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

    pub(crate) fn in_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input data rather than by the engine.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Encode(_) => false,
            Error::Batch { source, .. } | Error::Sample { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
