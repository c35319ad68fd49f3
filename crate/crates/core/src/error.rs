use thiserror::Error;

/// Errors produced by instance validation, belief updates, and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("action set is empty")]
    EmptyActionSet,
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("prior_cov not symmetric (max asymmetry {0:.3e})")]
    PriorNotSymmetric(f64),
    #[error("prior_cov not positive definite")]
    PriorNotPositiveDefinite,
    #[error("noise_var must be positive, got {0}")]
    NonpositiveNoise(f64),
    #[error("duplicate action: rows {0} and {1} are identical")]
    DuplicateAction(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("action index {index} out of range for {count} actions")]
    ActionOutOfRange { index: usize, count: usize },
    #[error("regret gap {0:.3e} below -1e-9: opt_index is not a maximizer")]
    NegativeGap(f64),
    #[error("update denominator sigma^2 + a'Sigma a = {0} is not positive; belief corrupted")]
    DegenerateUpdate(f64),
    #[error("covariance matrix not invertible at working precision")]
    NotInvertible,
    #[error("covariance factorization failed (matrix not positive definite)")]
    FactorizationFailed,
    #[error("probability vector sums to {0}, outside [0.999, 1.001]")]
    BadDistributionSum(f64),
    #[error("negative probability entry {0}")]
    NegativeProbability(f64),
    #[error("non-finite model entries after ensemble update (mismatched covariance inputs?)")]
    NonFiniteEnsemble,
    #[error("conditional mean undefined for action {0} with positive posterior mass")]
    UndefinedConditionalMean(usize),
    #[error("decomposition identity violated: |lhs - rhs| = {0:.3e} > 1e-10")]
    DecompositionIdentity(f64),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
