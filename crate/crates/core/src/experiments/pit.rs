use crate::analytic::expected_increment_exact;
use crate::error::{Error, Result};
use crate::math::{Environment, VotingRule};

/// Search window in rho for the pit of losses.
pub const PIT_WINDOW: (f64, f64) = (-3.0, 0.0);

const SCAN_POINTS: usize = 3001;
const ROOT_TOL: f64 = 1e-12;
const MIN_TOL: f64 = 1e-9;

/// Location and depth of the negative dip of the exact increment curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PitReport {
    pub n: u64,
    pub sigma: f64,
    pub alpha: f64,
    /// Zero crossing to the right of the minimum.
    pub right_zero: f64,
    pub min_rho: f64,
    /// Depth of the pit (negative).
    pub min_value: f64,
    /// Largest rho at or left of the minimum with `|M| <= epsilon * sigma`;
    /// the window edge if the curve never gets that close to zero there.
    pub left_epsilon_bound: f64,
    pub epsilon: f64,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > MIN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Finds the pit of losses of the exact curve for `n`, `sigma`, `alpha`.
///
/// `epsilon` is relative to sigma. Returns [`Error::NoPit`] when the curve
/// is non-negative over [`PIT_WINDOW`].
pub fn pit_report(n: u64, sigma: f64, alpha: f64, epsilon: f64) -> Result<PitReport> {
    let rule = VotingRule::new(n, alpha)?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be non-negative, got {epsilon}")));
    }
    Environment::new(0.0, sigma)?;
    let m = |rho: f64| {
        expected_increment_exact(&Environment::from_rho(rho, sigma).expect("finite rho"), &rule)
            .expect("validated rule")
            .value()
    };
    let (lo, hi) = PIT_WINDOW;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let rhos: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let vals: Vec<f64> = rhos.iter().map(|&r| m(r)).collect();

    let (imin, &vmin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan is non-empty");
    if vmin >= 0.0 {
        return Err(Error::NoPit);
    }

    let a = rhos[imin.saturating_sub(1)];
    let b = rhos[(imin + 1).min(SCAN_POINTS - 1)];
    let min_rho = golden_min(a, b, m);
    let min_value = m(min_rho).min(vmin);

    let right_zero = match (imin..SCAN_POINTS).find(|&j| vals[j] >= 0.0) {
        Some(j) => bisect(rhos[j - 1], rhos[j], m),
        None => {
            return Err(Error::Domain(format!(
                "pit for n = {n}, alpha = {alpha} extends past rho = {hi}"
            )))
        }
    };

    let eps_abs = epsilon * sigma;
    let g = |rho: f64| m(rho).abs() - eps_abs;
    let left_epsilon_bound = match (0..=imin).rev().find(|&j| g(rhos[j]) <= 0.0) {
        Some(j) if j == imin => min_rho,
        Some(j) => bisect(rhos[j], rhos[j + 1], g),
        None => lo,
    };

    Ok(PitReport {
        n,
        sigma,
        alpha,
        right_zero,
        min_rho,
        min_value,
        left_epsilon_bound: left_epsilon_bound.min(min_rho),
        epsilon,
    })
}
