//! Numerical engine for a society of egoist voters facing random proposals
//! from a normal environment and deciding them by an alpha-majority rule.
//!
//! * [`math`]: normal and binomial primitives, domain types.
//! * [`analytic`]: exact and approximate expected capital increments, the
//!   optimal-threshold estimate, its ladder and sensitivity.
//! * [`simulator`]: seeded Monte Carlo dynamics used as an oracle.
//! * [`experiments`]: sweeps, pit-of-losses search, CSV tables and the
//!   verification suite behind the `vise` binary.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod math;
pub mod simulator;

pub use analytic::{
    approx_validity, expected_increment_approx, expected_increment_exact, foc_residual,
    max_expected_increment, neutral_mean_increment, optimal_threshold_bruteforce,
    optimal_threshold_estimate, optimal_threshold_ladder, rescaled_curve_value,
    threshold_sensitivity, ApproxTerms, IncrementResult, Method, ThresholdEstimate, Validity,
};
pub use error::{Error, Result};
pub use math::{
    binomial_pmf, min_yes_votes, std_normal_cdf, std_normal_pdf, Environment, EnvironmentMoments,
    VotingRule,
};
pub use simulator::{run_simulation, SimulationConfig, SimulationSummary};
