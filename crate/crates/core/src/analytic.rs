//! Closed-form engine for the expected one-step capital increment of an
//! egoist agent under an alpha-majority rule.
//!
//! With `p = Phi(rho)`, `q = Phi(-rho)`, `f = phi(rho)` and `b(x|n)` the
//! binomial mass of `x` yes-votes, the exact increment is
//!
//! ```text
//! M = sigma * sum_{x = min_yes}^{n} (rho + (f/q) (x/(pn) - 1)) b(x|n)
//! ```
//!
//! and the normal approximation of the binomial replaces the sum by
//! `sigma * (rho Phi(tau) + f/sqrt(qpn) phi(tau))` with
//! `tau = (pn - [alpha n] - 0.5) / sqrt(qpn)`.

use crate::error::{Error, Result};
use crate::math::{
    inv_pi_sqrt, mills_ratio, mills_tail, std_normal_cdf, std_normal_pdf, Environment,
    EnvironmentMoments, VotingRule,
};

/// Beyond this `|rho|` every agent votes the same way with probability one
/// to machine precision, and the increment collapses to `mu` or `0`.
pub const DEGENERATE_RHO: f64 = 8.0;

/// Largest society the exact sum accepts.
pub const MAX_EXACT_N: u64 = 1_000_000;

/// Largest society for the exhaustive threshold search.
pub const MAX_BRUTEFORCE_N: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ExactSum,
    NormalApprox,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactSum => "exact_sum",
            Method::NormalApprox => "normal_approx",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An expected one-step capital increment together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncrementResult {
    value: f64,
    method: Method,
    std_error: Option<f64>,
}

impl IncrementResult {
    pub fn exact(value: f64) -> Self {
        Self { value, method: Method::ExactSum, std_error: None }
    }

    pub fn approx(value: f64) -> Self {
        Self { value, method: Method::NormalApprox, std_error: None }
    }

    /// Monte Carlo estimate; a negative or NaN standard error is clamped to 0.
    pub fn monte_carlo(value: f64, std_error: f64) -> Self {
        Self { value, method: Method::MonteCarlo, std_error: Some(std_error.max(0.0)) }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn std_error(&self) -> Option<f64> {
        self.std_error
    }
}

/// `tau` and `nu` of the normal approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxTerms {
    /// Standardized distance between the expected yes-count and the
    /// continuity-corrected acceptance boundary.
    pub tau: f64,
    /// `sigma f / sqrt(qpn)`, the scale of the maximal expected increment.
    pub nu: f64,
}

pub fn approx_terms(env: &Environment, rule: &VotingRule) -> Result<ApproxTerms> {
    let EnvironmentMoments { p, q, f } = env.moments();
    let qpn = q * p * rule.n() as f64;
    if qpn == 0.0 || f == 0.0 {
        return Err(Error::DegenerateEnvironment { rho: env.rho() });
    }
    let s = qpn.sqrt();
    let tau = (p * rule.n() as f64 - rule.class() as f64 - 0.5) / s;
    Ok(ApproxTerms { tau, nu: env.sigma() * f / s })
}

/// Outcome when every agent votes alike: `mu` if that unanimous vote passes.
fn degenerate_value(env: &Environment, rule: &VotingRule) -> f64 {
    let unanimous_yes = env.rho() > 0.0;
    let yes = if unanimous_yes { rule.n() } else { 0 };
    if rule.accepts(yes) {
        env.mu()
    } else {
        0.0
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Summands `(rho + (f/q)(x/(pn) - 1)) b(x|n)` of the exact formula, in
/// units of sigma, generated from `x = n` down to `x = lowest`.
fn exact_terms_desc(rho: f64, n: u64, lowest: u64) -> impl Iterator<Item = (u64, f64)> {
    let EnvironmentMoments { p, q, f } = EnvironmentMoments::at(rho);
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let pn = p * n as f64;
    let ln_n1 = libm::lgamma(n as f64 + 1.0);
    (lowest..=n).rev().map(move |x| {
        let xf = x as f64;
        let ln_b = ln_n1 - libm::lgamma(xf + 1.0) - libm::lgamma((n - x) as f64 + 1.0)
            + xf * ln_p
            + (n - x) as f64 * ln_q;
        let b = ln_b.exp();
        let t = if b == 0.0 { 0.0 } else { (rho + (f / q) * (xf / pn - 1.0)) * b };
        (x, t)
    })
}

fn check_exact_n(rule: &VotingRule) -> Result<()> {
    if rule.n() > MAX_EXACT_N {
        return Err(Error::Domain(format!(
            "exact sum supports n <= {MAX_EXACT_N}, got {}",
            rule.n()
        )));
    }
    Ok(())
}

/// Exact expected one-step capital increment of an agent.
pub fn expected_increment_exact(env: &Environment, rule: &VotingRule) -> Result<IncrementResult> {
    check_exact_n(rule)?;
    let n = rule.n();
    let m = rule.min_yes();
    if m > n {
        return Ok(IncrementResult::exact(0.0));
    }
    if m == 0 {
        return Ok(IncrementResult::exact(env.mu()));
    }
    if env.rho().abs() > DEGENERATE_RHO {
        return Ok(IncrementResult::exact(degenerate_value(env, rule)));
    }
    let mut acc = KahanSum::default();
    for (_, t) in exact_terms_desc(env.rho(), n, m) {
        acc.add(t);
    }
    Ok(IncrementResult::exact(env.sigma() * acc.total()))
}

/// Exact increment for every essentially different threshold of a society
/// of `n`, indexed by class `k = -1..=n` (entry `k + 1`).
///
/// Shares the summation order of [`expected_increment_exact`], so each entry
/// is bit-identical to the corresponding single evaluation.
pub fn exact_increments_all_classes(env: &Environment, n: u64) -> Result<Vec<f64>> {
    let probe = VotingRule::from_class(n, n as i64)?;
    check_exact_n(&probe)?;
    let mut out = vec![0.0; n as usize + 2];
    if env.rho().abs() > DEGENERATE_RHO {
        for k in -1..=n as i64 {
            let rule = VotingRule::from_class(n, k)?;
            out[(k + 1) as usize] =
                if k == -1 { env.mu() } else { degenerate_value(env, &rule) };
        }
        return Ok(out);
    }
    // Entry for class k holds the sum over x >= k + 1; class n stays 0.
    let mut acc = KahanSum::default();
    for (x, t) in exact_terms_desc(env.rho(), n, 1) {
        acc.add(t);
        out[x as usize] = env.sigma() * acc.total();
    }
    out[0] = env.mu();
    Ok(out)
}

/// Normal approximation of the expected one-step capital increment.
pub fn expected_increment_approx(env: &Environment, rule: &VotingRule) -> Result<IncrementResult> {
    if env.rho().abs() > DEGENERATE_RHO {
        return Ok(IncrementResult::approx(degenerate_value(env, rule)));
    }
    let EnvironmentMoments { p, q, f } = env.moments();
    let ApproxTerms { tau, .. } = approx_terms(env, rule)?;
    let qpn = q * p * rule.n() as f64;
    let v = env.rho() * std_normal_cdf(tau) + f / qpn.sqrt() * std_normal_pdf(tau);
    Ok(IncrementResult::approx(env.sigma() * v))
}

/// How far the normal approximation of the binomial can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Validity {
    Weak,
    Acceptable,
    Strong,
}

impl Validity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Validity::Weak => "weak",
            Validity::Acceptable => "acceptable",
            Validity::Strong => "strong",
        }
    }
}

pub fn approx_validity(env: &Environment, rule: &VotingRule) -> Validity {
    let EnvironmentMoments { p, q, .. } = env.moments();
    let qpn = q * p * rule.n() as f64;
    let central = p > 0.1 && p < 0.9;
    if central && qpn >= 9.0 {
        Validity::Strong
    } else if (central && qpn > 5.0) || qpn > 25.0 {
        Validity::Acceptable
    } else {
        Validity::Weak
    }
}

/// `sigma / (pi sqrt n)`: the approximate increment for odd `n`,
/// `alpha = 0.5` and a neutral environment.
pub fn neutral_mean_increment(sigma: f64, n: u64) -> Result<f64> {
    if n.is_multiple_of(2) {
        return Err(Error::Domain(format!("neutral_mean_increment needs odd n, got {n}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(sigma * inv_pi_sqrt(n))
}

/// Predicts the exact curve of a `target_n` society at `rho` from the curve
/// of a `base_n` society: `sqrt(base/target) * phi_base(rho sqrt(target/base))`.
pub fn rescaled_curve_value(
    base_n: u64,
    target_n: u64,
    rho: f64,
    sigma: f64,
    alpha: f64,
) -> Result<f64> {
    let rule = VotingRule::new(base_n, alpha)?;
    VotingRule::new(target_n, alpha)?;
    let k = (target_n as f64 / base_n as f64).sqrt();
    let env = Environment::from_rho(rho * k, sigma)?;
    Ok(expected_increment_exact(&env, &rule)?.value() / k)
}

/// Continuous estimate of the optimal acceptance threshold,
/// `p (1 - q rho / f)`. Depends on `rho` alone.
pub fn optimal_threshold_estimate(rho: f64) -> f64 {
    if rho > 3.0 {
        // 1 - rho q/f = c1 / (rho + c1) without cancellation.
        let c1 = mills_tail(rho, 1);
        std_normal_cdf(rho) * c1 / (rho + c1)
    } else if rho < -3.0 {
        let s = -rho;
        let p = std_normal_cdf(rho);
        p + s * std_normal_cdf(s) * mills_ratio(s)
    } else {
        let EnvironmentMoments { p, q, f } = EnvironmentMoments::at(rho);
        p * (1.0 - q * rho / f)
    }
}

fn ladder_class(alpha_hat: f64, n: u64) -> i64 {
    crate::math::integer_part(alpha_hat * n as f64).clamp(-1, n as i64)
}

/// Mean of the optimal threshold class, `([alpha_hat n] + 0.5) / n`.
pub fn optimal_threshold_ladder(rho: f64, n: u64) -> f64 {
    let k = ladder_class(optimal_threshold_estimate(rho), n.max(1));
    (k as f64 + 0.5) / n.max(1) as f64
}

/// The three notions of an optimal threshold for one environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdEstimate {
    pub alpha_hat: f64,
    pub alpha_ladder: f64,
    /// Lower end `k/n` of the exhaustively best class.
    pub alpha_bruteforce: f64,
    pub class_halfwidth: f64,
    pub ladder_class: i64,
    pub bruteforce_class: i64,
    /// Exact increment at the brute-force optimum.
    pub best_value: f64,
}

impl ThresholdEstimate {
    pub fn classes_agree(&self) -> bool {
        self.ladder_class == self.bruteforce_class
    }
}

/// Evaluates the exact increment at all `n + 2` essentially different
/// thresholds and keeps the best one; ties go to the smaller threshold.
pub fn optimal_threshold_bruteforce(env: &Environment, n: u64) -> Result<ThresholdEstimate> {
    if n == 0 || n > MAX_BRUTEFORCE_N {
        return Err(Error::Domain(format!(
            "brute-force threshold search needs 1 <= n <= {MAX_BRUTEFORCE_N}, got {n}"
        )));
    }
    let values = exact_increments_all_classes(env, n)?;
    let (mut best_idx, mut best) = (0usize, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let k = best_idx as i64 - 1;
    let alpha_hat = optimal_threshold_estimate(env.rho());
    let lk = ladder_class(alpha_hat, n);
    let nf = n as f64;
    Ok(ThresholdEstimate {
        alpha_hat,
        alpha_ladder: (lk as f64 + 0.5) / nf,
        alpha_bruteforce: k as f64 / nf,
        class_halfwidth: 0.5 / nf,
        ladder_class: lk,
        bruteforce_class: k,
        best_value: best,
    })
}

/// `E[max(0, t + Z)]` for standard normal `Z`: `phi(t) + t Phi(t)`.
fn expected_positive_part(t: f64) -> f64 {
    if t >= -3.0 {
        std_normal_pdf(t) + t * std_normal_cdf(t)
    } else {
        // phi(s) (1 - s R(s)) with 1 - s R(s) = c1 / (s + c1).
        let s = -t;
        let c1 = mills_tail(s, 1);
        std_normal_pdf(s) * c1 / (s + c1)
    }
}

/// Maximum expected increment under the optimal threshold,
/// `mu Phi(mu/nu) + nu phi(mu/nu)` with `nu = sigma f / sqrt(qpn)`.
pub fn max_expected_increment(env: &Environment, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidRule("society size n must be at least 1".into()));
    }
    let rho = env.rho();
    if rho > DEGENERATE_RHO {
        return Ok(env.mu());
    }
    let EnvironmentMoments { p, q, f } = env.moments();
    let nu = env.sigma() * f / (q * p * n as f64).sqrt();
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::DegenerateEnvironment { rho });
    }
    Ok(nu * expected_positive_part(env.mu() / nu))
}

/// Derivative of [`optimal_threshold_estimate`] in `rho`,
/// `((f + p rho)(f - q rho) - qp) / f`. Even in `rho`.
pub fn threshold_sensitivity(rho: f64) -> f64 {
    let r = rho.abs();
    if r <= 3.0 {
        let EnvironmentMoments { p, q, f } = EnvironmentMoments::at(rho);
        return ((f + p * rho) * (f - q * rho) - q * p) / f;
    }
    // Rearranged around the small tail q = R f:
    // f - 2 r q + q (1 + r^2) R + [r - (1 + r^2) R],
    // with the bracket equal to -c2 / ((r + c2)(r + c1)).
    let c2 = mills_tail(r, 2);
    let c1 = 1.0 / (r + c2);
    let big_r = 1.0 / (r + c1);
    let f = std_normal_pdf(r);
    let q = big_r * f;
    f - 2.0 * r * q + q * (1.0 + r * r) * big_r - c2 / ((r + c2) * (r + c1))
}

/// First-order condition residual `rho + (alpha - p) f / (qp)`; vanishes at
/// the continuous optimum.
pub fn foc_residual(alpha: f64, rho: f64) -> f64 {
    let EnvironmentMoments { p, q, f } = EnvironmentMoments::at(rho);
    rho + (alpha - p) * f / (q * p)
}

/// `(sqrt(2/pi) - sqrt(pi/2)) / 2`, the slope of the estimate at `rho = 0`.
pub fn sensitivity_at_zero() -> f64 {
    let two_over_pi = std::f64::consts::FRAC_2_PI;
    0.5 * (two_over_pi.sqrt() - (1.0 / two_over_pi).sqrt())
}
