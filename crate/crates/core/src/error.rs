use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate latent vector (zero norm or non-finite component)")]
    DegenerateVector,

    #[error("latent dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty text")]
    EmptyText,

    #[error("invalid token {0:?}: tokens must be non-empty and whitespace-free")]
    InvalidToken(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot seed landmarks: the corpus holds no {opposite} instance")]
    CannotSeedLandmarks { opposite: &'static str },

    #[error("degenerate neighborhood: no {missing} neighbor was generated ({diagnostics})")]
    DegenerateNeighborhood {
        missing: &'static str,
        diagnostics: String,
    },

    #[error("surrogate underdetermined: {0}")]
    SurrogateUnderdetermined(String),

    #[error("{op} failed{}: {message}", vector_suffix(.vector))]
    Model {
        op: &'static str,
        vector: Option<Vec<f64>>,
        message: String,
    },

    #[error(transparent)]
    Bridge(#[from] BridgeError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn vector_suffix(vector: &Option<Vec<f64>>) -> String {
    match vector {
        Some(v) => format!(" at latent vector {v:?}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the offending latent vector to a decode/predict failure.
    pub(crate) fn at_vector(self, op: &'static str, vector: &[f64]) -> Self {
        match self {
            Error::Model {
                op, message, vector: None,
            } => Error::Model {
                op,
                vector: Some(vector.to_vec()),
                message,
            },
            Error::Model { .. } => self,
            other => Error::Model {
                op,
                vector: Some(vector.to_vec()),
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("bridge server error: {0}")]
    Server(String),

    #[error("bridge protocol error: {0}")]
    Protocol(String),

    #[error("bridge transport error (retryable): {0}")]
    Transport(#[from] std::io::Error),

    #[error("bridge server did not answer within {0:?}")]
    Timeout(std::time::Duration),

    #[error("bridge connection closed")]
    Closed,
}

impl BridgeError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BridgeError::Transport(_) | BridgeError::Closed)
    }
}
