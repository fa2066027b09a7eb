use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point lies outside the effective domain of a mirror map.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{op} overflowed at coordinate {index}")]
    Saturation { op: &'static str, index: usize },

    #[error("no analytic form for {regularizer} on {domain}")]
    UnsupportedPair { regularizer: String, domain: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate weights: arm {arm} has probability {prob:e}")]
    DegenerateWeights { arm: usize, prob: f64 },

    #[error("tsallis normalizer failed: residual {residual:e} in bracket [{lo}, {hi}] after {iterations} iterations")]
    Solver {
        lo: f64,
        hi: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("wrong update mode: expected {expected}, optimizer is {actual}")]
    WrongMode {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("operation needs full-feedback records; ledger was produced in bandit mode")]
    BanditLedger,
}
