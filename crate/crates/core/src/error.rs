use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in factor {factor}: expected {expected}, got {got}")]
    DimensionMismatch { factor: usize, expected: usize, got: usize },
    #[error("singular block in factor {factor}")]
    Singular { factor: usize },
    #[error("factor {factor} acts trivially on the representation")]
    TrivialFactor { factor: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{0}")]
    NonFinite(String),
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
