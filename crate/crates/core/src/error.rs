use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid arm: {0}")]
    InvalidArm(String),
    #[error("a bandit needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("gradient undefined: arm {arm} has zero allocation and positive deviation")]
    ZeroAllocation { arm: usize },
    #[error("concavity constants undefined: {0}")]
    ConstantsUndefined(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("exhaustive grid supports at most {max} arms, got {got}")]
    GridTooLarge { max: usize, got: usize },
    #[error("grid resolution must be at least {min}, got {got}")]
    GridTooCoarse { min: usize, got: usize },
    #[error("arm index {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },
    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),
    #[error("arm {arm} has {count} samples, {needed} required")]
    InsufficientSamples { arm: usize, count: u64, needed: u64 },
    #[error("no traces to aggregate")]
    EmptyTraces,
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
