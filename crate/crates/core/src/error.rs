use thiserror::Error;

/// Errors raised by the semiclassical and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty shell: energy {energy} lies below the minimum {minimum}")]
    EmptyShell { energy: f64, minimum: f64 },

    #[error("open or unbounded shell at energy {0}")]
    OpenShell(f64),

    #[error("caustic: wedge {wedge:.3e} below tolerance {tolerance:.3e}")]
    Caustic { wedge: f64, tolerance: f64 },

    #[error("channel `{0}` is not hermitian")]
    NonHermitianChannel(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("step rejected: energy drift {drift:.3e} exceeds cap {cap:.3e}; reduce dt")]
    StepRejected { drift: f64, cap: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("length mismatch: {0} weights for {1} samples")]
    LengthMismatch(usize, usize),

    #[error("aliasing: boundary population {population:.3e} exceeds {threshold:.3e}")]
    Aliasing { population: f64, threshold: f64 },

    #[error("truncation leak: top-of-basis population {population:.3e} exceeds {threshold:.3e}")]
    TruncationLeak { population: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
