use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpError {
    /// Malformed pattern, corpus, code or JSON input. `line` is 1-based, 0 when unknown.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("store is empty")]
    EmptyStore,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A hit sequence cannot be merged without breaking some row's order.
    #[error("incompatible merge: {0}")]
    Incompatible(String),

    #[error("search limit exceeded: {0}")]
    LimitExceeded(String),

    /// Encoding would not compress the input; the caller should transmit it raw.
    #[error("no alignment with positive compression; transmit raw")]
    NoCompression,

    /// The code does not align against the store (corrupt code or wrong store).
    #[error("code does not decode: {0}")]
    Undecodable(String),
}

impl SpError {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        SpError::Format {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SpError>;
