use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for a {modes}-mode system")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("mode {0} used more than once")]
    DuplicateMode(usize),

    #[error("mode count mismatch: expected {expected}, got {actual}")]
    ModeMismatch { expected: usize, actual: usize },

    #[error("expected {expected} digits for the register, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("{what} cap exceeded: {value} > {limit}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scheme error: {0}")]
    Scheme(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
