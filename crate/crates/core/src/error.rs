use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian: entries ({i}, {j}) and ({j}, {i}) differ by {deviation:.3e}")]
    NotHermitian { i: usize, j: usize, deviation: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("invalid model: {0}")]
    Model(String),

    /// An operation was called outside its domain (non-bipartite network
    /// for a bipartite-only construction, non-NDCS network, ...).
    #[error("{0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
