use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("partial quotient at position {index} is {value}; parts must be >= 1")]
    InvalidPart { index: usize, value: i64 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("composition {0} is not canonical (needs at least one part and a last part >= 2)")]
    NonCanonical(String),

    #[error("{name} = {value} is out of range: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("{what} refused for n = {n} above the guard {limit}; pass an override to force it")]
    GuardExceeded {
        what: &'static str,
        n: u64,
        limit: u64,
    },

    #[error("beta = {beta} is outside the supported domain (needs {requirement})")]
    BetaOutOfDomain { beta: f64, requirement: &'static str },

    #[error("exact mode needs {requirement}; got beta = {beta}")]
    ExactModeUnsupported {
        beta: f64,
        requirement: &'static str,
    },

    #[error("{0} has no canonical continued fraction expansion (must lie strictly inside (0, 1))")]
    NoCanonicalExpansion(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("series {kind} with k = {k} diverges for beta = {beta} (needs k < {threshold})")]
    Divergent {
        kind: &'static str,
        k: u32,
        beta: f64,
        threshold: f64,
    },

    #[error("zeta argument s = {0} is too close to 1")]
    ZetaPole(f64),

    #[error("target error {target:e} is unreachable for s = {s} in double precision")]
    UnreachableTolerance { s: f64, target: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("samples do not share beta and kind")]
    MixedSamples,

    #[error("design matrix is rank deficient at column {column} (exponents too close over the window)")]
    RankDeficient { column: usize },

    #[error("residuals are all below 1e-15; the series has converged and no slope is defined")]
    Converged,

    #[error("64-bit overflow in fast mode; use exact mode")]
    Overflow,
}
