use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested evaluation would exceed a hard enumeration ceiling.
    #[error("infeasible: {what} needs {required} relays but the ceiling is {ceiling}")]
    Infeasible {
        what: &'static str,
        required: usize,
        ceiling: usize,
    },

    #[error("disconnected layout: no position in (0, L) can receive the next broadcast")]
    DisconnectedLayout,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
