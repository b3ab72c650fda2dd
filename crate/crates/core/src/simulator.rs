//! Seeded Monte Carlo dynamics: the environment draws a proposal, every
//! egoist votes yes iff its own increment is positive, and the proposal is
//! applied iff the yes-count reaches the rule's minimum.
//!
//! Trial `t` draws from its own ChaCha8 stream `(seed, t)`, and draws within
//! a trial are consumed in `(step, agent)` order, so results do not depend
//! on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::analytic::IncrementResult;
use crate::error::{Error, Result};
use crate::math::{Environment, VotingRule};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub env: Environment,
    pub rule: VotingRule,
    /// Proposals per trial.
    pub steps: u64,
    /// Independent trials.
    pub trials: u64,
    pub seed: u64,
    pub initial_capital: f64,
    /// Agents whose final capital is strictly below this are counted as ruined.
    pub ruin_level: f64,
}

impl SimulationConfig {
    pub fn new(env: Environment, rule: VotingRule, steps: u64, trials: u64, seed: u64) -> Self {
        Self { env, rule, steps, trials, seed, initial_capital: 0.0, ruin_level: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !self.initial_capital.is_finite() || !self.ruin_level.is_finite() {
            return Err(Error::InvalidConfig(
                "initial_capital and ruin_level must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// One vector of proposed capital increments, one entry per agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub increments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocietyState {
    pub capitals: Vec<f64>,
    pub step_index: u64,
}

impl SocietyState {
    pub fn new(n: usize, initial_capital: f64) -> Self {
        Self { capitals: vec![initial_capital; n], step_index: 0 }
    }

    /// Votes on `proposal` and applies it in place if it passes.
    pub fn apply(&mut self, proposal: &Proposal, rule: &VotingRule) -> Result<bool> {
        if proposal.increments.len() != self.capitals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.capitals.len(),
                got: proposal.increments.len(),
            });
        }
        let accepted = rule.accepts(tally_votes(proposal));
        if accepted {
            for (c, d) in self.capitals.iter_mut().zip(&proposal.increments) {
                *c += d;
            }
        }
        self.step_index += 1;
        Ok(accepted)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSummary {
    /// Realized increment per agent per step, rejected steps counting as 0.
    pub mean_step_increment: f64,
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub mean_final_capital: f64,
    pub ruined_count_mean: f64,
    /// Descriptive only: Gini coefficient of final capitals after shifting
    /// them to be non-negative, averaged over trials where it is defined.
    pub gini_final: Option<f64>,
}

impl SimulationSummary {
    pub fn as_increment(&self) -> IncrementResult {
        IncrementResult::monte_carlo(self.mean_step_increment, self.std_error)
    }
}

/// The RNG stream of trial `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn generate_proposal<R: Rng + ?Sized>(env: &Environment, n: usize, rng: &mut R) -> Proposal {
    let normal = Normal::new(env.mu(), env.sigma()).expect("environment sigma is positive");
    Proposal { increments: normal.sample_iter(rng).take(n).collect() }
}

/// Number of agents whose increment is strictly positive.
pub fn tally_votes(proposal: &Proposal) -> u64 {
    proposal.increments.iter().filter(|&&d| d > 0.0).count() as u64
}

pub fn apply_step(
    mut state: SocietyState,
    proposal: &Proposal,
    rule: &VotingRule,
) -> Result<(SocietyState, bool)> {
    let accepted = state.apply(proposal, rule)?;
    Ok((state, accepted))
}

#[derive(Clone, Debug)]
struct TrialOutcome {
    mean_increment: f64,
    // Sum of squared per-step mean increments, for single-trial runs.
    step_sq_sum: f64,
    accepted: u64,
    mean_final: f64,
    ruined: u64,
    gini: Option<f64>,
}

fn run_trial(config: &SimulationConfig, trial: u64) -> TrialOutcome {
    let n = config.rule.n() as usize;
    let mut rng = trial_rng(config.seed, trial);
    let normal =
        Normal::new(config.env.mu(), config.env.sigma()).expect("environment sigma is positive");
    let mut state = SocietyState::new(n, config.initial_capital);
    let mut proposal = Proposal { increments: vec![0.0; n] };
    let (mut sum, mut sq_sum, mut accepted) = (0.0, 0.0, 0u64);
    for _ in 0..config.steps {
        for d in proposal.increments.iter_mut() {
            *d = normal.sample(&mut rng);
        }
        let passed = state.apply(&proposal, &config.rule).expect("dimensions match");
        if passed {
            accepted += 1;
            let step_mean = proposal.increments.iter().sum::<f64>() / n as f64;
            sum += step_mean;
            sq_sum += step_mean * step_mean;
        }
    }
    let ruined = state.capitals.iter().filter(|&&c| c < config.ruin_level).count() as u64;
    TrialOutcome {
        mean_increment: sum / config.steps as f64,
        step_sq_sum: sq_sum,
        accepted,
        mean_final: state.capitals.iter().sum::<f64>() / n as f64,
        ruined,
        gini: gini_shifted(&state.capitals),
    }
}

/// Gini coefficient after shifting values so the smallest is non-negative.
/// `None` when every shifted value is zero.
pub fn gini_shifted(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let mut xs: Vec<f64> = values.iter().map(|v| v + shift).collect();
    xs.sort_by(f64::total_cmp);
    let total: f64 = xs.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let n = xs.len() as f64;
    let weighted: f64 = xs.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * x).sum();
    Some((2.0 * weighted / (n * total) - (n + 1.0) / n).max(0.0))
}

/// Runs the configured trials on the global rayon pool.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationSummary> {
    run_simulation_with_threads(config, None)
}

/// Runs the configured trials on `threads` workers (`None` uses the global
/// pool). The summary is identical for every worker count.
pub fn run_simulation_with_threads(
    config: &SimulationConfig,
    threads: Option<usize>,
) -> Result<SimulationSummary> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| collect_trials(config)),
        None => collect_trials(config),
    };
    Ok(summarize(config, &outcomes))
}

fn collect_trials(config: &SimulationConfig) -> Vec<TrialOutcome> {
    (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect()
}

// Fixed-order reduction over trial index.
fn summarize(config: &SimulationConfig, outcomes: &[TrialOutcome]) -> SimulationSummary {
    let trials = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.mean_increment).sum::<f64>() / trials;
    let std_error = if outcomes.len() >= 2 {
        let ss: f64 = outcomes.iter().map(|o| (o.mean_increment - mean).powi(2)).sum();
        (ss / (trials - 1.0) / trials).sqrt()
    } else if config.steps >= 2 {
        // One trial: steps are i.i.d., use their spread instead.
        let s = config.steps as f64;
        let var = (outcomes[0].step_sq_sum - s * mean * mean) / (s - 1.0);
        (var.max(0.0) / s).sqrt()
    } else {
        0.0
    };
    let accepted: u64 = outcomes.iter().map(|o| o.accepted).sum();
    let ginis: Vec<f64> = outcomes.iter().filter_map(|o| o.gini).collect();
    SimulationSummary {
        mean_step_increment: mean,
        std_error,
        acceptance_rate: accepted as f64 / (trials * config.steps as f64),
        mean_final_capital: outcomes.iter().map(|o| o.mean_final).sum::<f64>() / trials,
        ruined_count_mean: outcomes.iter().map(|o| o.ruined as f64).sum::<f64>() / trials,
        gini_final: if ginis.is_empty() {
            None
        } else {
            Some(ginis.iter().sum::<f64>() / ginis.len() as f64)
        },
    }
}

/// Splits a proposal budget into `(steps, trials)` with `steps * trials`
/// equal to the budget, using as many trials as possible up to 100.
pub fn split_budget(total_proposals: u64) -> (u64, u64) {
    let trials = (1..=100.min(total_proposals))
        .rev()
        .find(|&t| total_proposals.is_multiple_of(t))
        .unwrap_or(1);
    (total_proposals / trials, trials)
}

/// Seed for grid point `index`, derived with a SplitMix64 step so that
/// neighbouring points draw from unrelated streams.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One Monte Carlo estimate per environment in `env_grid`.
pub fn estimate_increment_curve(
    env_grid: &[Environment],
    rule: &VotingRule,
    total_proposals: u64,
    seed: u64,
) -> Result<Vec<(f64, IncrementResult)>> {
    if env_grid.is_empty() {
        return Err(Error::InvalidConfig("environment grid is empty".into()));
    }
    if total_proposals == 0 {
        return Err(Error::InvalidConfig("proposal budget must be positive".into()));
    }
    let (steps, trials) = split_budget(total_proposals);
    env_grid
        .iter()
        .enumerate()
        .map(|(i, env)| {
            let cfg = SimulationConfig::new(*env, *rule, steps, trials, point_seed(seed, i as u64));
            let s = run_simulation(&cfg)?;
            Ok((env.rho(), s.as_increment()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(n: u64, alpha: f64) -> VotingRule {
        VotingRule::new(n, alpha).unwrap()
    }

    #[test]
    fn proposal_moments() {
        let env = Environment::new(3.0, 10.0).unwrap();
        let mut rng = trial_rng(7, 0);
        let p = generate_proposal(&env, 1_000_000, &mut rng);
        let n = p.increments.len() as f64;
        let mean = p.increments.iter().sum::<f64>() / n;
        let var = p.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 3.0).abs() < 0.03, "{mean}");
        assert!((var.sqrt() - 10.0).abs() < 0.03, "{}", var.sqrt());
    }

    #[test]
    fn proposal_is_deterministic() {
        let env = Environment::new(0.0, 1.0).unwrap();
        let a = generate_proposal(&env, 21, &mut trial_rng(11, 3));
        let b = generate_proposal(&env, 21, &mut trial_rng(11, 3));
        assert_eq!(a, b);
        let c = generate_proposal(&env, 21, &mut trial_rng(11, 4));
        assert_ne!(a, c);
    }

    #[test]
    fn tally_examples() {
        assert_eq!(tally_votes(&Proposal { increments: vec![1.0; 5] }), 5);
        assert_eq!(tally_votes(&Proposal { increments: vec![-1.0; 5] }), 0);
        assert_eq!(tally_votes(&Proposal { increments: vec![-2.0, 0.0, 3.0] }), 1);
    }

    #[test]
    fn apply_step_examples() {
        let s = SocietyState::new(3, 0.0);
        let p = Proposal { increments: vec![1.0, 2.0, -5.0] };
        let (s, ok) = apply_step(s, &p, &rule(3, 0.5)).unwrap();
        assert!(ok);
        assert_eq!(s.capitals, vec![1.0, 2.0, -5.0]);
        assert_eq!(s.step_index, 1);

        let before = s.clone();
        let p = Proposal { increments: vec![1.0, -2.0, -5.0] };
        let (s, ok) = apply_step(s, &p, &rule(3, 0.5)).unwrap();
        assert!(!ok);
        assert_eq!(s.capitals, before.capitals);
        assert_eq!(s.step_index, 2);

        let mut inc = vec![1.0; 10];
        inc.extend(vec![-1.0; 10]);
        let (_, ok) = apply_step(SocietyState::new(20, 0.0), &Proposal { increments: inc }, &rule(20, 0.5))
            .unwrap();
        assert!(!ok);
    }

    #[test]
    fn apply_step_dimension_mismatch() {
        let r = apply_step(SocietyState::new(3, 0.0), &Proposal { increments: vec![1.0] }, &rule(3, 0.5));
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn bookkeeping_identity() {
        let env = Environment::new(-1.0, 4.0).unwrap();
        let r = rule(9, 0.5);
        let mut rng = trial_rng(5, 0);
        let mut state = SocietyState::new(9, 2.5);
        let mut expected = vec![2.5; 9];
        for _ in 0..500 {
            let p = generate_proposal(&env, 9, &mut rng);
            let before = state.capitals.clone();
            if state.apply(&p, &r).unwrap() {
                for (e, d) in expected.iter_mut().zip(&p.increments) {
                    *e += d;
                }
            } else {
                assert_eq!(before, state.capitals);
            }
        }
        assert_eq!(state.capitals, expected);
    }

    #[test]
    fn reject_all_and_accept_all() {
        let env = Environment::new(2.0, 10.0).unwrap();
        let s = run_simulation(&SimulationConfig::new(env, rule(21, 1.0), 200, 10, 1)).unwrap();
        assert_eq!(s.mean_step_increment, 0.0);
        assert_eq!(s.acceptance_rate, 0.0);
        assert_eq!(s.std_error, 0.0);
        assert_eq!(s.gini_final, None);

        let s = run_simulation(&SimulationConfig::new(env, rule(21, -1.0 / 21.0), 2000, 20, 1))
            .unwrap();
        assert_eq!(s.acceptance_rate, 1.0);
        assert!((s.mean_step_increment - 2.0).abs() <= 3.0 * s.std_error, "{s:?}");
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let env = Environment::new(-1.0, 3.0).unwrap();
        let cfg = SimulationConfig::new(env, rule(11, 0.5), 300, 17, 99);
        let a = run_simulation_with_threads(&cfg, Some(1)).unwrap();
        let b = run_simulation_with_threads(&cfg, Some(4)).unwrap();
        let c = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ruin_and_gini_are_reported() {
        let env = Environment::new(-1.0, 3.0).unwrap();
        let mut cfg = SimulationConfig::new(env, rule(11, 0.5), 500, 4, 3);
        cfg.initial_capital = 10.0;
        cfg.ruin_level = 5.0;
        let s = run_simulation(&cfg).unwrap();
        assert!((0.0..=11.0).contains(&s.ruined_count_mean));
        let g = s.gini_final.unwrap();
        assert!((0.0..1.0).contains(&g));
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini_shifted(&[1.0, 1.0, 1.0]), Some(0.0));
        assert_eq!(gini_shifted(&[0.0, 0.0]), None);
        let g = gini_shifted(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((g - 0.75).abs() < 1e-15);
        // Shift-to-nonnegative: {-1, 1} becomes {0, 2}.
        assert!((gini_shifted(&[-1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_config() {
        let env = Environment::new(0.0, 1.0).unwrap();
        assert!(run_simulation(&SimulationConfig::new(env, rule(3, 0.5), 0, 1, 0)).is_err());
        assert!(run_simulation(&SimulationConfig::new(env, rule(3, 0.5), 1, 0, 0)).is_err());
    }

    #[test]
    fn budget_split() {
        assert_eq!(split_budget(1_000_000), (10_000, 100));
        assert_eq!(split_budget(97), (1, 97));
        assert_eq!(split_budget(101), (101, 1));
        assert_eq!(split_budget(1), (1, 1));
    }

    #[test]
    fn curve_reject_all_and_determinism() {
        let grid = [Environment::new(0.0, 1.0).unwrap()];
        let out = estimate_increment_curve(&grid, &rule(21, 1.0), 1000, 5).unwrap();
        assert_eq!(out[0].1.value(), 0.0);
        assert_eq!(out[0].1.std_error(), Some(0.0));

        let grid: Vec<_> = [-0.5, 0.0, 0.5].iter().map(|&r| Environment::from_rho(r, 1.0).unwrap()).collect();
        let a = estimate_increment_curve(&grid, &rule(21, 0.5), 5000, 8).unwrap();
        let b = estimate_increment_curve(&grid, &rule(21, 0.5), 5000, 8).unwrap();
        assert_eq!(a, b);
        assert!(estimate_increment_curve(&[], &rule(21, 0.5), 10, 0).is_err());
    }
}
