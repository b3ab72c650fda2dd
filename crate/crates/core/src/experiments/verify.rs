//! The oracle suite: every closed-form result is checked against an
//! independent route (exhaustive search, finite differences, the simulator,
//! or a second algebraic form).

use std::fmt::Write as _;

use crate::analytic::{
    approx_validity, expected_increment_approx, expected_increment_exact, foc_residual,
    max_expected_increment, optimal_threshold_bruteforce, optimal_threshold_estimate,
    rescaled_curve_value, sensitivity_at_zero, threshold_sensitivity, Validity,
};
use crate::error::Result;
use crate::math::{
    binomial_pmf, std_normal_cdf, std_normal_pdf, Environment, EnvironmentMoments, VotingRule,
};
use crate::simulator::{point_seed, run_simulation, split_budget, SimulationConfig};

use super::{grid, ladder_table, optimal_spline, pit_report};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Proposals per Monte Carlo cell.
    pub budget: u64,
    /// Monte Carlo tolerance in standard errors; every cell must also be
    /// within `se_tolerance + 1`.
    pub se_tolerance: f64,
    /// Cells allowed outside `se_tolerance`.
    pub max_exceedances: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 20160119, budget: 1_000_000, se_tolerance: 3.0, max_exceedances: 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Flat `key=value` lines, one status and one detail line per check,
    /// then `overall`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{}={}", c.name, if c.passed { "pass" } else { "fail" });
            let _ = writeln!(out, "{}.detail={}", c.name, c.detail);
        }
        let _ = writeln!(out, "overall={}", if self.passed() { "pass" } else { "fail" });
        out
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }
}

/// The 9 Monte Carlo cells: rho in {-0.5, 0, 0.5} by alpha in {0.4, 0.5, 0.6}.
pub const MC_RHOS: [f64; 3] = [-0.5, 0.0, 0.5];
pub const MC_ALPHAS: [f64; 3] = [0.4, 0.5, 0.6];
const MC_N: u64 = 21;
const MC_SIGMA: f64 = 10.0;

/// Smoothed approximate increment with `[alpha n] + 0.5` replaced by
/// `alpha n`, the differentiable surrogate whose critical point is the
/// continuous estimate.
fn smoothed_approx(alpha: f64, rho: f64, n: u64) -> f64 {
    let EnvironmentMoments { p, q, f } = EnvironmentMoments::at(rho);
    let nf = n as f64;
    let tau = (p - alpha) * (nf / (q * p)).sqrt();
    rho * std_normal_cdf(tau) + f / (q * p * nf).sqrt() * std_normal_pdf(tau)
}

fn unwrap_or_fail<T>(r: Result<T>, report: &mut VerificationReport, name: &'static str) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            report.push(name, false, format!("error: {e}"));
            None
        }
    }
}

/// Runs the analytic checks on the calling thread, then the Monte Carlo
/// cells.
pub fn verify(opts: &VerifyOptions) -> VerificationReport {
    let mut report = VerificationReport::default();

    // Threshold anchors.
    {
        let a0 = optimal_threshold_estimate(0.0);
        let a5 = optimal_threshold_estimate(-0.5);
        let a1 = optimal_threshold_estimate(-1.0);
        let ok = a0 == 0.5 && (a5 - 0.61).abs() <= 0.005 && (a1 - 0.71).abs() <= 0.005;
        report.push("threshold_anchors", ok, format!("a(0)={a0} a(-0.5)={a5} a(-1)={a1}"));
    }

    // Slope at zero: closed form, rounded constant, finite difference.
    {
        let s = threshold_sensitivity(0.0);
        let closed = sensitivity_at_zero();
        let h = 1e-4;
        let fd = (optimal_threshold_estimate(h) - optimal_threshold_estimate(-h)) / (2.0 * h);
        let ok = (s - closed).abs() <= 1e-10 && (s + 0.2277).abs() <= 1e-4 && (fd - s).abs() <= 1e-6;
        report.push("sensitivity_constant", ok, format!("s(0)={s} closed={closed} fd={fd}"));
    }

    // Even, negative, and the derivative of the estimate.
    {
        let mut worst_even = 0f64;
        let mut all_negative = true;
        for rho in grid(-6.0, 6.0, 601).expect("static grid") {
            let s = threshold_sensitivity(rho);
            all_negative &= s < 0.0;
            worst_even = worst_even.max((s - threshold_sensitivity(-rho)).abs());
        }
        let mut worst_fd = 0f64;
        let h = 1e-4;
        for rho in grid(-3.0, 3.0, 301).expect("static grid") {
            let fd = (optimal_threshold_estimate(rho + h) - optimal_threshold_estimate(rho - h))
                / (2.0 * h);
            worst_fd = worst_fd.max((fd - threshold_sensitivity(rho)).abs());
        }
        let ok = all_negative && worst_even <= 1e-12 && worst_fd <= 1e-6;
        report.push(
            "sensitivity_shape",
            ok,
            format!("negative={all_negative} max_even_gap={worst_even:e} max_fd_gap={worst_fd:e}"),
        );
    }

    // Estimate is strictly decreasing.
    {
        let g = grid(-3.0, 3.0, 1000).expect("static grid");
        let vals: Vec<f64> = g.iter().map(|&r| optimal_threshold_estimate(r)).collect();
        let ok = vals.windows(2).all(|w| w[1] < w[0]);
        report.push("estimate_monotone", ok, format!("points={}", g.len()));
    }

    // First-order condition: algebraic identity.
    {
        let worst = grid(-3.0, 3.0, 100)
            .expect("static grid")
            .into_iter()
            .map(|rho| foc_residual(optimal_threshold_estimate(rho), rho).abs())
            .fold(0.0, f64::max);
        report.push("foc_identity", worst <= 1e-12, format!("max_residual={worst:e}"));
    }

    // First-order condition: the estimate is a critical point of the
    // smoothed approximation, by finite differences in alpha.
    {
        let h = 1e-6;
        let n = 21;
        let mut worst = 0f64;
        for rho in grid(-1.5, 1.5, 31).expect("static grid") {
            let a = optimal_threshold_estimate(rho);
            let d = (smoothed_approx(a + h, rho, n) - smoothed_approx(a - h, rho, n)) / (2.0 * h);
            worst = worst.max(d.abs());
        }
        report.push("foc_stationarity", worst <= 1e-6, format!("max_abs_derivative={worst:e}"));
    }

    // Neutral-environment law.
    {
        let mut worst_approx = 0f64;
        let mut worst_exact_rel = 0f64;
        let mut failed = None;
        for n in (3..=101u64).step_by(2) {
            let env = Environment::new(0.0, 1.0).expect("valid");
            let rule = VotingRule::new(n, 0.5).expect("valid");
            let law = 1.0 / (std::f64::consts::PI * (n as f64).sqrt());
            match (expected_increment_approx(&env, &rule), expected_increment_exact(&env, &rule)) {
                (Ok(a), Ok(x)) => {
                    worst_approx = worst_approx.max((a.value() - law).abs());
                    if n >= 21 {
                        worst_exact_rel = worst_exact_rel.max(((x.value() - law) / law).abs());
                    }
                }
                (Err(e), _) | (_, Err(e)) => failed = Some(e.to_string()),
            }
        }
        let ok = failed.is_none() && worst_approx <= 1e-12 && worst_exact_rel < 0.05;
        report.push(
            "neutral_law",
            ok,
            format!("max_approx_gap={worst_approx:e} max_exact_rel={worst_exact_rel:e}"),
        );
    }

    // Maximum expected increment collapses to the neutral law at mu = 0.
    {
        let mut worst = 0f64;
        for n in [1u64, 3, 21, 101, 1001] {
            let law = 10.0 / (std::f64::consts::PI * (n as f64).sqrt());
            if let Ok(v) = max_expected_increment(&Environment::new(0.0, 10.0).expect("valid"), n) {
                worst = worst.max((v - law).abs());
            } else {
                worst = f64::INFINITY;
            }
        }
        report.push("max_increment_neutral", worst <= 1e-12, format!("max_gap={worst:e}"));
    }

    // Exact vs approximation where the approximation is trusted.
    {
        let sigma = 10.0;
        let mut worst_ratio = 0f64;
        let mut compared = 0usize;
        for n in [21u64, 31, 51] {
            let tol = 0.05 * sigma / (n as f64).sqrt();
            for alpha in [0.4, 0.5, 0.6] {
                let rule = VotingRule::new(n, alpha).expect("valid");
                for rho in grid(-1.5, 1.5, 50).expect("static grid") {
                    let env = Environment::from_rho(rho, sigma).expect("valid");
                    if approx_validity(&env, &rule) == Validity::Weak {
                        continue;
                    }
                    let (Ok(x), Ok(a)) =
                        (expected_increment_exact(&env, &rule), expected_increment_approx(&env, &rule))
                    else {
                        worst_ratio = f64::INFINITY;
                        continue;
                    };
                    compared += 1;
                    worst_ratio = worst_ratio.max((x.value() - a.value()).abs() / tol);
                }
            }
        }
        report.push(
            "exact_vs_approx",
            worst_ratio <= 1.0,
            format!("compared={compared} worst_gap_over_tolerance={worst_ratio}"),
        );
    }

    // Scaling law between society sizes.
    {
        let mut worst = 0f64;
        let mut err = None;
        for (base, target) in [(49u64, 196u64), (36, 144)] {
            let rule = VotingRule::new(target, 0.5).expect("valid");
            let g = grid(-1.5, 1.5, 50).expect("static grid");
            let mut direct = Vec::new();
            let mut scaled = Vec::new();
            for &rho in &g {
                let env = Environment::from_rho(rho, 1.0).expect("valid");
                match (
                    expected_increment_exact(&env, &rule),
                    rescaled_curve_value(base, target, rho, 1.0, 0.5),
                ) {
                    (Ok(d), Ok(s)) => {
                        direct.push(d.value());
                        scaled.push(s);
                    }
                    (Err(e), _) | (_, Err(e)) => err = Some(e.to_string()),
                }
            }
            let peak = direct.iter().fold(0f64, |m, v| m.max(v.abs()));
            let sup = direct.iter().zip(&scaled).fold(0f64, |m, (d, s)| m.max((d - s).abs()));
            worst = worst.max(sup / peak);
        }
        report.push(
            "scaling_law",
            err.is_none() && worst <= 0.05,
            format!("max_gap_over_peak={worst:e}"),
        );
    }

    // Scale invariance of the optimal threshold.
    {
        let mut ok = true;
        for rho in [-1.0, -0.4, 0.0, 0.3, 1.2] {
            let base = Environment::from_rho(rho, 1.0).expect("valid");
            let scaled = Environment::new(rho * 7.5, 7.5).expect("valid");
            match (optimal_threshold_bruteforce(&base, 21), optimal_threshold_bruteforce(&scaled, 21)) {
                (Ok(a), Ok(b)) => {
                    ok &= a.bruteforce_class == b.bruteforce_class
                        && a.ladder_class == b.ladder_class
                        && (b.best_value - 7.5 * a.best_value).abs() <= 1e-12 * b.best_value.abs().max(1.0);
                }
                _ => ok = false,
            }
        }
        report.push("scale_invariance", ok, "factor=7.5 n=21".into());
    }

    // Pit of losses.
    if let Some(p) = unwrap_or_fail(pit_report(21, 1.0, 0.5, 1e-3), &mut report, "pit_right_zero") {
        report.push(
            "pit_right_zero",
            (p.right_zero + 0.266).abs() <= 0.005,
            format!("right_zero={} min_rho={} min_value={}", p.right_zero, p.min_rho, p.min_value),
        );
    }
    {
        let depths: Result<Vec<(u64, f64)>> = (3..=31u64)
            .step_by(2)
            .map(|n| Ok((n, pit_report(n, 1.0, 0.5, 1e-3)?.min_value.abs())))
            .collect();
        if let Some(d) = unwrap_or_fail(depths, &mut report, "pit_depth_peak") {
            let (n_best, depth) =
                d.iter().cloned().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
            report.push("pit_depth_peak", n_best == 7, format!("argmax_n={n_best} depth={depth}"));
        }
        let trio: Result<Vec<f64>> =
            [19u64, 20, 21].iter().map(|&n| Ok(pit_report(n, 1.0, 0.5, 1e-3)?.min_value.abs())).collect();
        if let Some(t) = unwrap_or_fail(trio, &mut report, "pit_even_shallower") {
            report.push(
                "pit_even_shallower",
                t[1] < t[0].min(t[2]),
                format!("depth19={} depth20={} depth21={}", t[0], t[1], t[2]),
            );
        }
    }

    // Optimal spline and ladder.
    if let Some(s) = unwrap_or_fail(optimal_spline(21, 10.0, (-3.0, 3.0), 121), &mut report, "spline_positive") {
        let min = s.iter().map(|p| p.best_value).fold(f64::INFINITY, f64::min);
        let dominates = s.iter().all(|p| p.all_values.iter().all(|&v| p.best_value >= v));
        report.push("spline_positive", min > 0.0 && dominates, format!("min_best_value={min:e}"));
    }
    if let Some(t) = unwrap_or_fail(ladder_table(21, (-0.5, 0.5), 100), &mut report, "ladder_agreement") {
        let rate = t.agreement_rate();
        let gap = t.max_class_gap();
        report.push(
            "ladder_agreement",
            rate >= 0.8 && gap <= 1,
            format!("rate={rate} disagreements={} max_class_gap={gap}", t.disagreements()),
        );
    }

    monte_carlo_checks(opts, &mut report);
    report
}

fn monte_carlo_checks(opts: &VerifyOptions, report: &mut VerificationReport) {
    let (steps, trials) = split_budget(opts.budget.max(1));
    let mut value_z = Vec::new();
    let mut rate_z = Vec::new();
    let mut detail = String::new();
    for (i, (&rho, &alpha)) in MC_RHOS
        .iter()
        .flat_map(|r| MC_ALPHAS.iter().map(move |a| (r, a)))
        .enumerate()
    {
        let env = Environment::from_rho(rho, MC_SIGMA).expect("valid");
        let rule = VotingRule::new(MC_N, alpha).expect("valid");
        let exact = match expected_increment_exact(&env, &rule) {
            Ok(v) => v.value(),
            Err(e) => {
                report.push("mc_vs_exact", false, format!("error: {e}"));
                return;
            }
        };
        let EnvironmentMoments { p, .. } = env.moments();
        let accept_prob: f64 = (rule.min_yes()..=MC_N)
            .map(|x| binomial_pmf(x, MC_N, p).unwrap_or(f64::NAN))
            .sum();
        let cfg = SimulationConfig::new(env, rule, steps, trials, point_seed(opts.seed, i as u64));
        let s = match run_simulation(&cfg) {
            Ok(s) => s,
            Err(e) => {
                report.push("mc_vs_exact", false, format!("error: {e}"));
                return;
            }
        };
        let z = (s.mean_step_increment - exact).abs() / s.std_error;
        let total = (steps * trials) as f64;
        let rate_se = (accept_prob * (1.0 - accept_prob) / total).sqrt();
        let zr = (s.acceptance_rate - accept_prob).abs() / rate_se;
        let _ = write!(detail, "[rho={rho} alpha={alpha} z={z:.3}]");
        value_z.push(z);
        rate_z.push(zr);
    }
    let judge = |zs: &[f64]| {
        let exceed = zs.iter().filter(|&&z| z.is_nan() || z > opts.se_tolerance).count();
        let hard = zs.iter().all(|&z| z <= opts.se_tolerance + 1.0);
        (exceed <= opts.max_exceedances && hard, exceed)
    };
    let (ok, exceed) = judge(&value_z);
    report.push(
        "mc_vs_exact",
        ok,
        format!("cells=9 budget={} exceed={exceed} {detail}", opts.budget),
    );
    let (ok, exceed) = judge(&rate_z);
    let worst = rate_z.iter().cloned().fold(0.0, f64::max);
    report.push("mc_acceptance_rate", ok, format!("exceed={exceed} worst_z={worst:.3}"));
}
