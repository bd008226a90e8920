//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by channel models, front ends, metrics, and optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("negative power {value:.3e} W: {context}")]
    NegativePower { value: f64, context: String },

    #[error("passivity violation: radiated power {0:.3e} W below tolerance")]
    PassivityViolation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical scheme did not converge: {0}")]
    Convergence(String),

    #[error("grazing spatial harmonic: beta_l = 0 at l = {0}")]
    SingularHarmonic(i64),

    #[error("state space of size {size} exceeds cap {cap}; use greedy selection instead")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    #[error("undefined baseline: reference metric '{0}' is zero")]
    UndefinedBaseline(String),

    #[error("linearity violation: metric '{0}' is flagged logarithmic; convert to linear units first")]
    LinearityViolation(String),

    #[error("metric specification error: {0}")]
    Specification(String),

    #[error("rank deficient matrix: {0}")]
    RankDeficient(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
