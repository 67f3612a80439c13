use thiserror::Error;

/// Errors raised by environment construction, dynamics and kernel evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("invalid factor index {index} for an operator with {count} factors")]
    InvalidFactor { index: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("environment is not right-canonical (residual {0:e})")]
    NotCanonical(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("site {site} is beyond the environment length {len}")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("operation requires a homogeneous environment")]
    NotHomogeneous,

    #[error("infinite correlation length: |second eigenvalue| = {0}")]
    InfiniteCorrelationLength(f64),

    #[error("Fock cutoff did not converge: shift {shift:e} at cutoff {cutoff}")]
    CutoffNotConverged { cutoff: usize, shift: f64 },

    #[error("missing kernel entry K[{k}][{m}]")]
    MissingKernel { k: usize, m: usize },

    #[error("interaction has no Hamiltonian generator")]
    MissingHamiltonian,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
