//! Sweeps over the normalized mean that regenerate the model's curves as
//! tables, plus the pit-of-losses search and the verification suite.
//!
//! Grid points are evaluated in parallel; rows always come back in grid
//! order.

pub mod config;
pub mod csv;
mod pit;
mod verify;

use rayon::prelude::*;

use crate::analytic::{
    approx_validity, exact_increments_all_classes, expected_increment_approx,
    expected_increment_exact, optimal_threshold_bruteforce, optimal_threshold_estimate,
    sensitivity_at_zero, threshold_sensitivity, IncrementResult, Method, Validity,
};
use crate::error::{Error, Result};
use crate::math::{std_normal_pdf, Environment, VotingRule, FRAC_1_SQRT_2PI};
use crate::simulator::{point_seed, run_simulation, split_budget, SimulationConfig};

use self::csv::Table;

pub use pit::{pit_report, PitReport, PIT_WINDOW};
pub use verify::{verify, Check, VerifyOptions, VerificationReport};

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Domain(format!("a grid needs at least 2 points, got {points}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Domain(format!("bad grid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// Monte Carlo settings for sweeps that include the simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    pub proposals: u64,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { proposals: 100_000, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub rho: f64,
    pub mu: f64,
    pub value: f64,
    pub method: Method,
    pub std_error: Option<f64>,
    pub validity: Validity,
}

/// One row per `(rho, method)`, grid-major.
pub fn sweep_increment(
    n: u64,
    sigma: f64,
    alpha: f64,
    rho_range: (f64, f64),
    points: usize,
    methods: &[Method],
    mc: McOptions,
) -> Result<Vec<CurvePoint>> {
    let rule = VotingRule::new(n, alpha)?;
    let rhos = grid(rho_range.0, rho_range.1, points)?;
    let (steps, trials) = split_budget(mc.proposals.max(1));
    let rows: Vec<Result<Vec<CurvePoint>>> = rhos
        .par_iter()
        .enumerate()
        .map(|(i, &rho)| {
            let env = Environment::from_rho(rho, sigma)?;
            let validity = approx_validity(&env, &rule);
            methods
                .iter()
                .map(|m| {
                    let r: IncrementResult = match m {
                        Method::ExactSum => expected_increment_exact(&env, &rule)?,
                        Method::NormalApprox => expected_increment_approx(&env, &rule)?,
                        Method::MonteCarlo => {
                            let cfg = SimulationConfig::new(
                                env,
                                rule,
                                steps,
                                trials,
                                point_seed(mc.seed, i as u64),
                            );
                            run_simulation(&cfg)?.as_increment()
                        }
                    };
                    Ok(CurvePoint {
                        rho,
                        mu: env.mu(),
                        value: r.value(),
                        method: r.method(),
                        std_error: r.std_error(),
                        validity,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(points * methods.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn curve_table(points: &[CurvePoint]) -> Table {
    let mut t = Table::new(&["rho", "mu", "method", "value", "std_error", "validity"]);
    for p in points {
        t.push(vec![
            p.rho.into(),
            p.mu.into(),
            p.method.as_str().into(),
            p.value.into(),
            p.std_error.into(),
            p.validity.as_str().into(),
        ]);
    }
    t
}

/// Best threshold class at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SplinePoint {
    pub rho: f64,
    pub mu: f64,
    /// Optimal class `k`: thresholds in `[k/n, (k+1)/n)` act identically.
    pub best_class: i64,
    pub best_value: f64,
    /// Exact increment for every class `-1..=n` (entry `k + 1`).
    pub all_values: Vec<f64>,
}

impl SplinePoint {
    pub fn class_lower(&self, n: u64) -> f64 {
        self.best_class as f64 / n as f64
    }

    pub fn class_upper(&self, n: u64) -> f64 {
        (self.best_class + 1) as f64 / n as f64
    }
}

/// At each rho, the maximum exact increment over all `n + 2` essentially
/// different thresholds.
pub fn optimal_spline(
    n: u64,
    sigma: f64,
    rho_range: (f64, f64),
    points: usize,
) -> Result<Vec<SplinePoint>> {
    let rhos = grid(rho_range.0, rho_range.1, points)?;
    rhos.par_iter()
        .map(|&rho| {
            let env = Environment::from_rho(rho, sigma)?;
            let est = optimal_threshold_bruteforce(&env, n)?;
            Ok(SplinePoint {
                rho,
                mu: env.mu(),
                best_class: est.bruteforce_class,
                best_value: est.best_value,
                all_values: exact_increments_all_classes(&env, n)?,
            })
        })
        .collect()
}

pub fn spline_table(n: u64, points: &[SplinePoint]) -> Table {
    let mut t = Table::new(&[
        "rho",
        "mu",
        "best_class",
        "best_alpha_lower",
        "best_alpha_upper",
        "best_alpha_mean",
        "best_value",
    ]);
    for p in points {
        let (lo, hi) = (p.class_lower(n), p.class_upper(n));
        t.push(vec![
            p.rho.into(),
            p.mu.into(),
            p.best_class.into(),
            lo.into(),
            hi.into(),
            (0.5 * (lo + hi)).into(),
            p.best_value.into(),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderRow {
    pub rho: f64,
    pub alpha_hat: f64,
    pub alpha_ladder: f64,
    pub alpha_bruteforce: f64,
    pub ladder_class: i64,
    pub bruteforce_class: i64,
}

impl LadderRow {
    pub fn agrees(&self) -> bool {
        self.ladder_class == self.bruteforce_class
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderTable {
    pub n: u64,
    pub rows: Vec<LadderRow>,
}

impl LadderTable {
    pub fn agreement_rate(&self) -> f64 {
        self.rows.iter().filter(|r| r.agrees()).count() as f64 / self.rows.len() as f64
    }

    pub fn disagreements(&self) -> usize {
        self.rows.iter().filter(|r| !r.agrees()).count()
    }

    /// Largest class gap between ladder and brute force, in steps of `1/n`.
    pub fn max_class_gap(&self) -> i64 {
        self.rows
            .iter()
            .map(|r| (r.ladder_class - r.bruteforce_class).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[
            "rho",
            "alpha_hat",
            "alpha_ladder",
            "alpha_bruteforce",
            "ladder_class",
            "bruteforce_class",
            "agree",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.rho.into(),
                r.alpha_hat.into(),
                r.alpha_ladder.into(),
                r.alpha_bruteforce.into(),
                r.ladder_class.into(),
                r.bruteforce_class.into(),
                r.agrees().into(),
            ]);
        }
        t
    }
}

/// Continuous estimate, its ladder and the brute-force optimum per rho.
/// Thresholds depend on rho only, so sigma is fixed at 1.
pub fn ladder_table(n: u64, rho_range: (f64, f64), points: usize) -> Result<LadderTable> {
    let rhos = grid(rho_range.0, rho_range.1, points)?;
    let rows = rhos
        .par_iter()
        .map(|&rho| {
            let est = optimal_threshold_bruteforce(&Environment::from_rho(rho, 1.0)?, n)?;
            Ok(LadderRow {
                rho,
                alpha_hat: est.alpha_hat,
                alpha_ladder: est.alpha_ladder,
                alpha_bruteforce: est.alpha_bruteforce,
                ladder_class: est.ladder_class,
                bruteforce_class: est.bruteforce_class,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LadderTable { n, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub rho: f64,
    pub alpha_hat: f64,
    pub minus_derivative: f64,
    /// Normal density scaled to equal `minus_derivative` at rho = 0.
    pub matched_normal_density: f64,
}

/// Scale that maps `phi(rho)` onto `-d alpha_hat / d rho` at rho = 0.
pub fn matched_density_scale() -> f64 {
    -sensitivity_at_zero() / FRAC_1_SQRT_2PI
}

pub fn sensitivity_table(rho_range: (f64, f64), points: usize) -> Result<Vec<SensitivityRow>> {
    let scale = matched_density_scale();
    Ok(grid(rho_range.0, rho_range.1, points)?
        .into_iter()
        .map(|rho| SensitivityRow {
            rho,
            alpha_hat: optimal_threshold_estimate(rho),
            minus_derivative: -threshold_sensitivity(rho),
            matched_normal_density: scale * std_normal_pdf(rho),
        })
        .collect())
}

pub fn sensitivity_csv(rows: &[SensitivityRow]) -> Table {
    let mut t = Table::new(&["rho", "alpha_hat", "minus_derivative", "matched_normal_density"]);
    for r in rows {
        t.push(vec![
            r.rho.into(),
            r.alpha_hat.into(),
            r.minus_derivative.into(),
            r.matched_normal_density.into(),
        ]);
    }
    t
}
