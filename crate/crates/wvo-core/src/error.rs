use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an API contract (wrong family kind, shape mismatch, bad argument).
    #[error("usage error: {0}")]
    Usage(String),
    /// Input data is malformed or outside the model's support.
    #[error("data error: {0}")]
    Data(String),
    /// The sampler could not start from a finite log density.
    #[error("initialization error: {0}")]
    Init(String),
    /// The chain never accepted a proposal during warmup.
    #[error("divergence error: {0}")]
    Divergence(String),
    /// An objective context cannot be evaluated (e.g. all posterior rows at -inf).
    #[error("degenerate context: {0}")]
    DegenerateContext(String),
    /// Numerical failure outside the categories above.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    /// A file exists but cannot be parsed into the expected schema.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
