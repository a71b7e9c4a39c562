use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPd { min_eig: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },

    #[error("malformed matrix: {0}")]
    Malformed(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("D·B·D is singular; mutual information I(Z; DX+Z) is unbounded")]
    SingularInput,

    #[error("channel matrix D is singular")]
    SingularD,

    #[error("matrix parameter A is singular (condition number {condition:e})")]
    SingularA { condition: f64 },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("mixture component {0} has a covariance that is not positive definite")]
    DegenerateComponent(usize),

    #[error("enhancement property violated: {0}")]
    EnhancementPropertyViolation(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("input covariance B is outside the feasible set 0 ⪯ B ⪯ S")]
    InfeasibleB,

    #[error("brute-force oracle supports n ≤ 2, got n = {0}")]
    DimensionTooLarge(usize),

    #[error("probability grid too large: {points} points (limit {limit})")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid weight μ = {mu} for scenario {scenario}: {reason}")]
    InvalidWeight {
        mu: f64,
        scenario: u8,
        reason: &'static str,
    },

    #[error("KKT certificate rejected: residual {residual:e} exceeds {limit:e}")]
    CertificateRejected { residual: f64, limit: f64 },

    #[error("too few Monte Carlo samples: {0} (need at least 1000)")]
    TooFewSamples(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
