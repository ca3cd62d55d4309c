use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("closed-form Riccati denominator vanishes at t = {t}")]
    SingularClosedForm { t: f64 },

    #[error("Riccati solution blows up between t = {t_lo} and t = {t_hi}")]
    BlowUp { t_lo: f64, t_hi: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("Riccati equation {which} is not solvable: det = {det:e} at t = {t}")]
    Unsolvable { which: &'static str, t: f64, det: f64 },

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("state became non-finite at step {step}")]
    Diverged { step: usize },

    #[error("seller index {index} out of range for {n} sellers")]
    SellerOutOfRange { index: usize, n: usize },

    #[error("population needs at least 2 sellers, got {0}")]
    TooFewSellers(usize),

    #[error("cannot aggregate an empty sample")]
    EmptySample,

    #[error("rate fit needs at least {needed} population sizes, got {got}")]
    TooFewSizes { needed: usize, got: usize },

    #[error("shooting failed to bracket the terminal condition on [{lo}, {hi}]")]
    ShootingBracket { lo: f64, hi: f64 },

    #[error("perturbation has {got} points, grid has {expected}")]
    PerturbationMismatch { expected: usize, got: usize },
}
