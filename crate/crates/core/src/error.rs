use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: malformed JSON record: {msg}", path.display())]
    MalformedJson {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: u64 },

    #[error("cannot read shard {}: {source}", path.display())]
    ShardRead {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: invalid file format: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("language profile training set is empty")]
    EmptyTrainingSet,

    #[error("no language profiles supplied")]
    NoProfiles,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("vocabulary size {0} is smaller than the 256-byte alphabet")]
    VocabTooSmall(usize),

    #[error("unknown token id {0}")]
    UnknownId(u32),

    #[error("embedding vocabulary is empty")]
    EmptyVocab,

    #[error("non-finite loss at epoch {epoch}, token {token}: {loss}")]
    NonFiniteLoss { epoch: usize, token: u64, loss: f64 },

    #[error("word {0:?} is out of vocabulary and has no character n-grams")]
    NoNgrams(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}
