use thiserror::Error;

pub type Result<T, E = IdentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment of order {order} is undefined for {family}")]
    MomentUndefined { family: String, order: usize },

    #[error("moment order {order} exceeds the supported maximum {max}")]
    OrderExceeded { order: usize, max: usize },

    #[error("component {index} is degenerate (zero variance)")]
    DegenerateComponent { index: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("all coefficients are zero")]
    AllZeroCoefficients,

    #[error("tau is identically zero: |a| is a permutation of |b|")]
    DegenerateTau,

    #[error("root isolation failed: {0}")]
    RootIsolationFailure(String),

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("scale matrix is not symmetric positive definite")]
    SigmaNotPd,

    #[error("degenerate instance (both fourth moments equal 3) in: {}", partitions.join("; "))]
    DegenerateInstance { partitions: Vec<String> },

    #[error("component {index} cannot be sampled (moment-only specification)")]
    NotSamplable { index: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

impl IdentError {
    /// Errors that come from numerical procedures rather than bad input.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(self, IdentError::RootIsolationFailure(_))
    }
}
