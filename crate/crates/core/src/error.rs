use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid voting rule: {0}")]
    InvalidRule(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("proposal has {got} increments, society has {expected} agents")]
    DimensionMismatch { expected: usize, got: usize },

    /// `p` or `q` underflowed; the increment formulas are numerically
    /// meaningless and the outcome is either "accept all" or "reject all".
    #[error("degenerate environment (rho = {rho}): p or q is zero to machine precision")]
    DegenerateEnvironment { rho: f64 },

    #[error("no pit of losses: expected increment is non-negative on the search window")]
    NoPit,

    #[error("config file line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
