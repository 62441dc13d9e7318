use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a mathematical operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Root bracketing or bisection failed.
    #[error("solver error: {0}")]
    Solver(String),

    /// Least squares with fewer than two distinct abscissae.
    #[error("rank-deficient projection: {0}")]
    RankDeficient(String),

    /// A theoretical invariant was violated during a computation.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Invalid configuration. `field` names the offending key.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("graph construction error: {0}")]
    Graph(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
