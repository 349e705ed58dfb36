use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("Fock index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fisher matrix is singular (determinant {det:e}, scale {scale:e})")]
    SingularFisher { det: f64, scale: f64 },

    #[error("optimizer did not converge after {iterations} iterations (projected gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("multiplier sweep failed to bracket the photon-number constraint: {0}")]
    SweepBracketFailure(String),

    #[error("log-likelihood is flat over the phase grid (range {range:e})")]
    FlatLikelihood { range: f64 },

    #[error("posterior normalization underflowed")]
    DegeneratePosterior,

    #[error("mean differenced count {mean:.6} outside the invertible fringe range [{lo:.6}, {hi:.6}]")]
    OutOfFringeRange { mean: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
