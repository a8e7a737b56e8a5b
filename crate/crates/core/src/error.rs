use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The backscatter link carries no power (alpha * |g_c|^2 == 0), so the
    /// outage threshold xi is undefined.
    #[error("backscatter link is dead (alpha * |g_c|^2 = 0)")]
    DeadBdLink,

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
