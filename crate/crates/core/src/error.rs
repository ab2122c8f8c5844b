use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative routine did not reach its tolerance.
    #[error("numeric failure in {what} after {iterations} iterations")]
    NumericFailure {
        what: &'static str,
        iterations: usize,
    },

    /// A run-time invariant was observed broken during a simulation.
    #[error("invariant violated at round {round}: {what}")]
    Invariant { round: usize, what: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
