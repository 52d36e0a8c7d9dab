use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("site index {index} out of range for a ring of {n_sites} sites")]
    Index { index: i64, n_sites: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
