use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed WAV: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: {message}")]
    UnsupportedAudio { path: PathBuf, message: String },

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: spkid_core::Error,
    },

    #[error("line {line}: {message}")]
    Spec { line: usize, message: String },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("model file is truncated")]
    Truncated,

    #[error("model file is not a {expected} file")]
    WrongFormat { expected: &'static str },

    #[error("unsupported model file version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file checksum mismatch: recorded {recorded}, computed {computed}")]
    Checksum { recorded: String, computed: String },

    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn core(context: impl Into<String>, source: spkid_core::Error) -> Self {
        Self::Core {
            context: context.into(),
            source,
        }
    }
}
