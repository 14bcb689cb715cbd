use thiserror::Error;

/// Crate-wide error taxonomy. The CLI maps `Numeric` to exit code 3 and
/// everything else to exit code 2.
#[derive(Error, Debug)]
pub enum Error {
    /// Incompatible matrix/vector dimensions.
    #[error("shape error: {0}")]
    Shape(String),

    /// An argument is outside its documented domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// An object is used in a state it does not support (stale tape,
    /// degenerate density model, ...).
    #[error("state error: {0}")]
    State(String),

    /// Non-finite values where finite ones are required, divergence during
    /// training, failed numeric preconditions.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input files or configs (bad headers, unknown keys, ...).
    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
