use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A strided tile access touched memory past the end of the buffer.
    #[error("tile region out of bounds at {axis} {index}: needs {needed} elements, buffer has {len}")]
    Bounds {
        axis: &'static str,
        index: usize,
        needed: usize,
        len: usize,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
