//! Independent reference implementations checked against the engine.

use std::f64::consts::PI;

use vise::analytic::expected_increment_exact;
use vise::math::{binomial_pmf, std_normal_cdf, std_normal_pdf};
use vise::simulator::run_simulation;
use vise::{Environment, SimulationConfig, VotingRule};

/// Phi by the positive-term series of erf (small |x|) and a Laplace
/// continued fraction for the tails.
fn phi_oracle(x: f64) -> f64 {
    if x.abs() < 3.0 {
        let z = x.abs() / 2f64.sqrt();
        let mut term = z;
        let mut sum = z;
        for k in 1..200 {
            term *= 2.0 * z * z / (2 * k + 1) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        let erf = 2.0 / PI.sqrt() * (-z * z).exp() * sum;
        if x >= 0.0 {
            0.5 + 0.5 * erf
        } else {
            0.5 - 0.5 * erf
        }
    } else {
        let t = x.abs();
        let mut cf = t;
        for k in (1..300).rev() {
            cf = t + k as f64 / cf;
        }
        let tail = (-0.5 * t * t).exp() / (2.0 * PI).sqrt() / cf;
        if x > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

#[test]
fn cdf_against_frozen_high_precision_values() {
    let table = [
        (-0.5, 0.308_537_538_725_986_9),
        (-1.0, 0.158_655_253_931_457_05),
        (-3.0, 0.001_349_898_031_630_094_5),
        (-5.0, 2.866_515_718_791_939e-7),
        (-8.0, 6.220_960_574_271_784e-16),
        (2.5, 0.993_790_334_674_223_8),
    ];
    for (x, want) in table {
        let got = std_normal_cdf(x);
        assert!(((got - want) / want).abs() < 1e-13, "Phi({x}) = {got}, want {want}");
        assert!(((phi_oracle(x) - want) / want).abs() < 1e-12, "oracle at {x}");
    }
    assert!((std_normal_pdf(1.0) - 0.241_970_724_519_143_35).abs() < 1e-16);
}

#[test]
fn cdf_against_series_oracle_on_a_grid() {
    for i in 0..=200 {
        let x = -10.0 + 0.1 * i as f64;
        let (got, want) = (std_normal_cdf(x), phi_oracle(x));
        assert!((got - want).abs() <= 1e-12 * want + 1e-16, "x={x}: {got} vs {want}");
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Truncated means of N(mu, sigma) over the positive and negative half-lines.
fn truncated_means(mu: f64, sigma: f64) -> (f64, f64) {
    let rho = mu / sigma;
    let (p, q, f) = (phi_oracle(rho), phi_oracle(-rho), (-0.5 * rho * rho).exp() / (2.0 * PI).sqrt());
    (mu * p + sigma * f, mu * q - sigma * f)
}

#[test]
fn truncated_means_by_quadrature() {
    for (mu, sigma) in [(0.0, 1.0), (-2.0, 3.0), (1.5, 0.7), (-5.0, 10.0)] {
        let dens = |x: f64| x * (-0.5 * ((x - mu) / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
        let lo = mu - 14.0 * sigma;
        let hi = mu + 14.0 * sigma;
        let pos = simpson(dens, 0.0, hi.max(1.0), 20_000);
        let neg = simpson(dens, lo.min(-1.0), 0.0, 20_000);
        let (tp, tn) = truncated_means(mu, sigma);
        assert!((pos - tp).abs() < 1e-9 * sigma, "{pos} vs {tp}");
        assert!((neg - tn).abs() < 1e-9 * sigma, "{neg} vs {tn}");
    }
}

/// P(Bin(n, p) >= k) by forward pmf recurrence.
fn binomial_tail(n: u64, p: f64, k: i64) -> f64 {
    if k <= 0 {
        return 1.0;
    }
    if k as u64 > n {
        return 0.0;
    }
    let q = 1.0 - p;
    let mut pmf = q.powi(n as i32);
    let mut below = 0.0;
    for x in 0..k as u64 {
        below += pmf;
        pmf *= (n - x) as f64 / (x + 1) as f64 * p / q;
    }
    (1.0 - below).max(0.0)
}

/// Expected increment of one agent, conditioning on its own vote.
fn conditional_route(mu: f64, sigma: f64, n: u64, alpha: f64) -> f64 {
    let m = VotingRule::new(n, alpha).unwrap().min_yes() as i64;
    let p = phi_oracle(mu / sigma);
    let (tp, tn) = truncated_means(mu, sigma);
    tp * binomial_tail(n - 1, p, m - 1) + tn * binomial_tail(n - 1, p, m)
}

#[test]
fn exact_sum_matches_conditional_route() {
    for n in [1u64, 2, 3, 7, 20, 21, 50] {
        for alpha in [-1.0 / n as f64, 0.0, 0.3, 0.5, 0.6, 0.9, 1.0] {
            for rho in [-2.0, -0.8, -0.266, 0.0, 0.4, 1.5] {
                let sigma = 3.0;
                let env = Environment::from_rho(rho, sigma).unwrap();
                let rule = VotingRule::new(n, alpha).unwrap();
                let got = expected_increment_exact(&env, &rule).unwrap().value();
                let want = conditional_route(rho * sigma, sigma, n, alpha);
                assert!(
                    (got - want).abs() <= 1e-11 * sigma,
                    "n={n} alpha={alpha} rho={rho}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn binomial_pmf_matches_recurrence() {
    let (n, p) = (40u64, 0.37f64);
    let mut pmf = (1.0 - p).powi(40);
    for x in 0..=n {
        let got = binomial_pmf(x, n, p).unwrap();
        assert!((got - pmf).abs() <= 1e-14 + 1e-12 * pmf, "x={x}");
        pmf *= (n - x) as f64 / (x + 1) as f64 * p / (1.0 - p);
    }
}

#[test]
fn monte_carlo_agrees_with_exact_sum() {
    let env = Environment::new(-5.0, 10.0).unwrap();
    let rule = VotingRule::new(21, 0.5).unwrap();
    let cfg = SimulationConfig::new(env, rule, 10_000, 100, 99);
    let s = run_simulation(&cfg).unwrap();
    let e = expected_increment_exact(&env, &rule).unwrap().value();
    assert!((s.mean_step_increment - e).abs() <= 3.0 * s.std_error, "{} vs {e} (se {})", s.mean_step_increment, s.std_error);

    let m = rule.min_yes() as i64;
    let pa = binomial_tail(21, phi_oracle(-0.5), m);
    let n_props = 1_000_000.0;
    let se = (pa * (1.0 - pa) / n_props).sqrt();
    assert!((s.acceptance_rate - pa).abs() <= 3.0 * se, "{} vs {pa}", s.acceptance_rate);
}
