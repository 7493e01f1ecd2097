use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Unsupported or inconsistent configuration (dimension, scheme, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A function produced a non-finite value during evaluation.
    /// Carries the offending node when one is known.
    #[error("evaluation error: {message}")]
    Evaluation {
        message: String,
        node: Option<Vec<f64>>,
    },

    /// A geometric object could not be built (degenerate simplex,
    /// unbounded ratio, ...).
    #[error("construction error: {0}")]
    Construction(String),

    /// A desk-scale resource guard tripped.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    /// An internal invariant was violated; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn evaluation(message: impl Into<String>, node: Option<&[f64]>) -> Self {
        Error::Evaluation {
            message: message.into(),
            node: node.map(|v| v.to_vec()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
