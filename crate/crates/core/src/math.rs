//! Scalar probability primitives shared by the analytic engine and the
//! simulator: standard normal density and distribution function, the
//! binomial mass function, and the vote-count convention of the
//! alpha-majority rule.

use std::cell::Cell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// 1/sqrt(2*pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Relative slack used when snapping `alpha * n` onto an integer, so that
/// thresholds written as `k / n` land in class `k` despite rounding.
const CLASS_SNAP: f64 = 1e-9;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, `0.5 * erfc(-x / sqrt 2)`.
///
/// Going through `erfc` keeps full relative accuracy in the lower tail,
/// where `0.5 * (1 + erf(x))` would cancel.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    if let Some(fault) = CDF_FAULT.with(Cell::get) {
        return fault(x);
    }
    if x == 0.0 {
        return 0.5;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

type CdfFn = fn(f64) -> f64;

thread_local! {
    static CDF_FAULT: Cell<Option<CdfFn>> = const { Cell::new(None) };
}

/// Fault-injection hook: runs `body` with `std_normal_cdf` replaced by
/// `fault` on the current thread only.
#[doc(hidden)]
pub fn with_cdf_fault<R>(fault: CdfFn, body: impl FnOnce() -> R) -> R {
    struct Reset(Option<CdfFn>);
    impl Drop for Reset {
        fn drop(&mut self) {
            CDF_FAULT.with(|c| c.set(self.0));
        }
    }
    let _reset = Reset(CDF_FAULT.with(|c| c.replace(Some(fault))));
    body()
}

/// Natural log of the binomial coefficient C(n, x).
pub fn ln_choose(n: u64, x: u64) -> f64 {
    debug_assert!(x <= n);
    if x == 0 || x == n {
        return 0.0;
    }
    let (n, x) = (n as f64, x as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(x + 1.0) - libm::lgamma(n - x + 1.0)
}

/// Binomial probability `C(n, x) p^x (1-p)^(n-x)`, evaluated in log-space.
pub fn binomial_pmf(x: u64, n: u64, p: f64) -> Result<f64> {
    if x > n {
        return Err(Error::Domain(format!("binomial_pmf: x = {x} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binomial_pmf: p = {p} outside [0, 1]")));
    }
    Ok(binomial_pmf_unchecked(x, n, p, 1.0 - p))
}

/// Same as [`binomial_pmf`] with the complement supplied by the caller.
///
/// Passing `q` separately lets callers use `Phi(-rho)` rather than
/// `1 - Phi(rho)`, which loses all precision once `p` is close to one.
pub(crate) fn binomial_pmf_unchecked(x: u64, n: u64, p: f64, q: f64) -> f64 {
    // Degenerate endpoints: 0^0 = 1.
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let ln = ln_choose(n, x) + x as f64 * p.ln() + (n - x) as f64 * q.ln();
    ln.exp()
}

/// Integer part used throughout: floor, with `alpha * n` snapped to the
/// nearest integer when it is within rounding distance of one.
pub fn integer_part(y: f64) -> i64 {
    let r = y.round();
    if (y - r).abs() <= CLASS_SNAP * r.abs().max(1.0) {
        r as i64
    } else {
        y.floor() as i64
    }
}

/// Proposal-generating environment `N(mu, sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Environment {
    mu: f64,
    sigma: f64,
}

impl Environment {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidEnvironment(format!("mu must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidEnvironment(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        if !(mu / sigma).is_finite() {
            return Err(Error::InvalidEnvironment(format!(
                "rho = mu/sigma is not finite for mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Environment with the given normalized mean `rho` and scale `sigma`.
    pub fn from_rho(rho: f64, sigma: f64) -> Result<Self> {
        Self::new(rho * sigma, sigma)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Normalized mean (inverse coefficient of variation).
    pub fn rho(&self) -> f64 {
        self.mu / self.sigma
    }

    pub fn moments(&self) -> EnvironmentMoments {
        EnvironmentMoments::at(self.rho())
    }
}

/// `p = Phi(rho)`, `q = Phi(-rho)` and `f = phi(rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvironmentMoments {
    /// Probability that a single increment is positive.
    pub p: f64,
    /// Probability that a single increment is negative.
    pub q: f64,
    /// Standard normal density at rho.
    pub f: f64,
}

impl EnvironmentMoments {
    pub fn at(rho: f64) -> Self {
        Self {
            p: std_normal_cdf(rho),
            q: std_normal_cdf(-rho),
            f: std_normal_pdf(rho),
        }
    }
}

/// Society size and strict relative acceptance threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VotingRule {
    n: u64,
    alpha: f64,
}

impl VotingRule {
    pub fn new(n: u64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRule("society size n must be at least 1".into()));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidRule(format!("alpha must be finite, got {alpha}")));
        }
        let class = integer_part(alpha * n as f64);
        if class < -1 || class > n as i64 || alpha > 1.0 + CLASS_SNAP {
            return Err(Error::InvalidRule(format!(
                "alpha = {alpha} outside [-1/n, 1] for n = {n}"
            )));
        }
        Ok(Self { n, alpha })
    }

    /// Rule whose threshold is the lower end `k / n` of class `k`,
    /// `k` in `-1..=n`.
    pub fn from_class(n: u64, k: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidRule("society size n must be at least 1".into()));
        }
        if k < -1 || k > n as i64 {
            return Err(Error::InvalidRule(format!("class {k} outside -1..={n}")));
        }
        Ok(Self { n, alpha: k as f64 / n as f64 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Equivalence class `integer_part(alpha * n)`, in `-1..=n`.
    pub fn class(&self) -> i64 {
        integer_part(self.alpha * self.n as f64)
    }

    /// Smallest yes-count that passes a proposal.
    pub fn min_yes(&self) -> u64 {
        min_yes_votes(self)
    }

    pub fn accepts(&self, yes: u64) -> bool {
        yes >= self.min_yes()
    }
}

/// `integer_part(alpha * n) + 1`: 0 accepts everything, `n + 1` rejects
/// everything.
pub fn min_yes_votes(rule: &VotingRule) -> u64 {
    (rule.class() + 1) as u64
}

/// Tail `c_k(x) = k / (x + (k+1) / (x + (k+2) / ...))` of the Laplace
/// continued fraction for the Mills ratio, `Phi(-x) / phi(x) = 1 / (x + c_1(x))`.
///
/// Only meant for `x >= 2`, where a few hundred levels converge to full
/// double precision.
pub(crate) fn mills_tail(x: f64, k: u32) -> f64 {
    const DEPTH: u32 = 400;
    let mut t = 0.0;
    for j in (k..k + DEPTH).rev() {
        t = j as f64 / (x + t);
    }
    t
}

/// Mills ratio `Phi(-x) / phi(x)`, finite for every finite `x`.
pub fn mills_ratio(x: f64) -> f64 {
    if x >= 3.0 {
        1.0 / (x + mills_tail(x, 1))
    } else {
        std_normal_cdf(-x) / std_normal_pdf(x)
    }
}

/// `1 / (pi sqrt n)` helper used by the neutral-environment law.
pub(crate) fn inv_pi_sqrt(n: u64) -> f64 {
    1.0 / (PI * (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_values() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-9);
        assert!((std_normal_pdf(1.0) - 0.241_970_724_5).abs() < 1e-9);
        assert_eq!(std_normal_pdf(2.5), std_normal_pdf(-2.5));
    }

    #[test]
    fn cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(-0.5) - 0.308_537_538_7).abs() < 1e-8);
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_9).abs() < 1e-8);
    }

    #[test]
    fn cdf_symmetry_grid() {
        for i in 0..1000 {
            let x = -8.0 + 16.0 * i as f64 / 999.0;
            let s = std_normal_cdf(x) + std_normal_cdf(-x);
            assert!((s - 1.0).abs() <= 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        let h = 1e-5;
        for i in 0..=1000 {
            let x = -5.0 + 10.0 * i as f64 / 1000.0;
            let fd = (std_normal_cdf(x + h) - std_normal_cdf(x - h)) / (2.0 * h);
            assert!((fd - std_normal_pdf(x)).abs() <= 1e-6, "x = {x}");
        }
    }

    #[test]
    fn pmf_examples() {
        assert!((binomial_pmf(1, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(binomial_pmf(0, 5, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(3, 5, 0.0).unwrap(), 0.0);
        assert_eq!(binomial_pmf(5, 5, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn pmf_normalization() {
        for &n in &[1u64, 7, 21, 100] {
            for &p in &[0.1, 0.5, 0.9] {
                let s: f64 = (0..=n).map(|x| binomial_pmf(x, n, p).unwrap()).sum();
                assert!((s - 1.0).abs() <= 1e-9, "n = {n}, p = {p}: {s}");
            }
        }
    }

    #[test]
    fn pmf_large_n_does_not_overflow() {
        let n = 1_000_000;
        let v = binomial_pmf(n / 2, n, 0.5).unwrap();
        // Stirling: sqrt(2 / (pi n))
        let approx = (2.0 / (PI * n as f64)).sqrt();
        assert!((v / approx - 1.0).abs() < 1e-5);
    }

    #[test]
    fn pmf_domain_errors() {
        assert!(matches!(binomial_pmf(3, 2, 0.5), Err(Error::Domain(_))));
        assert!(matches!(binomial_pmf(1, 2, 1.5), Err(Error::Domain(_))));
        assert!(matches!(binomial_pmf(1, 2, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn min_yes_examples() {
        assert_eq!(VotingRule::new(21, 0.5).unwrap().min_yes(), 11);
        assert_eq!(VotingRule::new(20, 0.5).unwrap().min_yes(), 11);
        assert_eq!(VotingRule::new(21, -1.0 / 21.0).unwrap().min_yes(), 0);
        assert_eq!(VotingRule::new(21, 1.0).unwrap().min_yes(), 22);
    }

    #[test]
    fn class_thresholds_snap() {
        for n in 1..200u64 {
            for k in -1..=n as i64 {
                let rule = VotingRule::new(n, k as f64 / n as f64).unwrap();
                assert_eq!(rule.class(), k, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn rule_validation() {
        assert!(VotingRule::new(0, 0.5).is_err());
        assert!(VotingRule::new(10, 1.01).is_err());
        assert!(VotingRule::new(10, -0.2).is_err());
        assert!(VotingRule::new(10, f64::NAN).is_err());
        assert!(VotingRule::from_class(10, 11).is_err());
    }

    #[test]
    fn mills_ratio_branches_meet() {
        let direct = std_normal_cdf(-3.0) / std_normal_pdf(3.0);
        let cf = 1.0 / (3.0 + mills_tail(3.0, 1));
        assert!((direct / cf - 1.0).abs() < 1e-13);
        // Large-x asymptotics: R(x) ~ 1/x - 1/x^3 + 3/x^5
        let x = 40.0f64;
        let asym = 1.0 / x - 1.0 / x.powi(3) + 3.0 / x.powi(5) - 15.0 / x.powi(7);
        assert!((mills_ratio(x) / asym - 1.0).abs() < 1e-10);
    }

    #[test]
    fn environment_validation() {
        assert!(Environment::new(0.0, 0.0).is_err());
        assert!(Environment::new(0.0, -1.0).is_err());
        assert!(Environment::new(f64::INFINITY, 1.0).is_err());
        assert!(Environment::new(1e300, 1e-300).is_err());
        let env = Environment::new(-5.0, 10.0).unwrap();
        assert_eq!(env.rho(), -0.5);
        let m = env.moments();
        assert!((m.p + m.q - 1.0).abs() < 1e-12);
        assert!(m.f > 0.0);
    }
}
