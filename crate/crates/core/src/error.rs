use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input: duplicate labels, bad ids, invalid tables.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity error: {observables} observables exceeds the limit of {limit}")]
    Capacity { observables: usize, limit: usize },

    /// Coordinate sets or table grids that do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A value outside its admissible range, e.g. a negative implied probability.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty result: {0}")]
    Empty(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
