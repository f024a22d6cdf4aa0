use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("covariance factorization failed even with jitter {jitter:.3e}")]
    Factorization { jitter: f64 },

    #[error("{rejected} of {total} Monte Carlo samples were non-finite")]
    Rejection { rejected: u64, total: u64 },

    #[error("Hilbert space dimension {dimension} exceeds the cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("bath truncation not converged: density matrix moved by {change:.3e} (tolerance {tolerance:.3e})")]
    TruncationNotConverged { change: f64, tolerance: f64 },

    #[error("density matrix has an imaginary residue of {0:.3e}")]
    ImaginaryResidue(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
