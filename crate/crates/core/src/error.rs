use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum CatError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl CatError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CatError::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, CatError::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, CatError>;
