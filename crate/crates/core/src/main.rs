use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use vise::analytic::{expected_increment_exact, Method};
use vise::experiments::config::ConfigFile;
use vise::experiments::csv::{Cell, Table};
use vise::experiments::{
    curve_table, grid, ladder_table, optimal_spline, pit_report, sensitivity_csv,
    sensitivity_table, spline_table, sweep_increment, verify, McOptions, VerifyOptions,
};
use vise::math::{with_cdf_fault, Environment, VotingRule};
use vise::simulator::{point_seed, run_simulation_with_threads, split_budget, SimulationConfig};
use vise::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "vise", version, about = "Egoist voting in a stochastic environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Society size
    #[arg(long)]
    n: Option<u64>,
    /// Standard deviation of proposed increments
    #[arg(long)]
    sigma: Option<f64>,
    /// Relative acceptance threshold (strict)
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho_max: Option<f64>,
    /// Grid points over [rho-min, rho-max]
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo proposals per grid point
    #[arg(long)]
    proposals: Option<u64>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// exact | approx | mc | all
    #[arg(long)]
    method: Option<String>,
    /// Flat key = value file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected increment curve over rho
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Locate the pit of losses
    Pit {
        #[command(flatten)]
        common: Common,
        /// |M| <= epsilon * sigma counts as negligible
        #[arg(long)]
        epsilon: Option<f64>,
        /// Report every n from --n to --n-max
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        n_step: Option<u64>,
    },
    /// Best threshold class and value over rho
    Spline {
        #[command(flatten)]
        common: Common,
    },
    /// Continuous, ladder and brute-force optimal thresholds
    Ladder {
        #[command(flatten)]
        common: Common,
    },
    /// Slope of the optimal-threshold estimate
    Sensitivity {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo dynamics
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Single normalized mean (overrides the rho grid)
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (results do not depend on it)
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        initial_capital: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        ruin_level: Option<f64>,
    },
    /// Run the oracle suite; exit status 1 on any failure
    Verify {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo tolerance in standard errors
        #[arg(long)]
        se_tolerance: Option<f64>,
        #[arg(long, hide = true)]
        corrupt_cdf: bool,
    },
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "sigma",
    "alpha",
    "rho-min",
    "rho-max",
    "points",
    "seed",
    "proposals",
    "out",
    "method",
    "epsilon",
    "n-max",
    "n-step",
    "rho",
    "steps",
    "trials",
    "threads",
    "initial-capital",
    "ruin-level",
    "se-tolerance",
];

/// Flag value, else config-file value, else default.
struct Resolver {
    file: ConfigFile,
}

impl Resolver {
    fn new(common: &Common) -> Result<Self> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        file.check_keys(KNOWN_KEYS)?;
        Ok(Self { file })
    }

    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key),
        }
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    Ok(match s {
        "exact" => vec![Method::ExactSum],
        "approx" => vec![Method::NormalApprox],
        "mc" => vec![Method::MonteCarlo],
        "all" => vec![Method::ExactSum, Method::NormalApprox, Method::MonteCarlo],
        other => {
            return Err(Error::Domain(format!(
                "unknown method {other:?}; expected exact, approx, mc or all"
            )))
        }
    })
}

fn emit(out: Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(body.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn rho_range(r: &Resolver, c: &Common, lo: f64, hi: f64) -> Result<(f64, f64)> {
    Ok((r.get(c.rho_min, "rho-min", lo)?, r.get(c.rho_max, "rho-max", hi)?))
}

fn out_path(r: &Resolver, c: &Common) -> Result<Option<PathBuf>> {
    r.opt(c.out.clone(), "out")
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep { common: c } => {
            let r = Resolver::new(&c)?;
            let methods = parse_methods(&r.get(c.method.clone(), "method", "exact".to_string())?)?;
            let rows = sweep_increment(
                r.get(c.n, "n", 21)?,
                r.get(c.sigma, "sigma", 10.0)?,
                r.get(c.alpha, "alpha", 0.5)?,
                rho_range(&r, &c, -2.0, 2.0)?,
                r.get(c.points, "points", 81)?,
                &methods,
                McOptions {
                    proposals: r.get(c.proposals, "proposals", 100_000)?,
                    seed: r.get(c.seed, "seed", 1)?,
                },
            )?;
            emit(out_path(&r, &c)?, &curve_table(&rows).to_csv())?;
        }
        Command::Pit { common: c, epsilon, n_max, n_step } => {
            let r = Resolver::new(&c)?;
            let n0 = r.get(c.n, "n", 21)?;
            let n1 = r.get(n_max, "n-max", n0)?;
            let step = r.get(n_step, "n-step", 1)?.max(1);
            let sigma = r.get(c.sigma, "sigma", 1.0)?;
            let alpha = r.get(c.alpha, "alpha", 0.5)?;
            let eps = r.get(epsilon, "epsilon", 1e-3)?;
            let mut t = Table::new(&[
                "n",
                "sigma",
                "alpha",
                "epsilon",
                "has_pit",
                "right_zero",
                "min_rho",
                "min_value",
                "left_epsilon_bound",
            ]);
            let mut n = n0;
            while n <= n1 {
                let head: Vec<Cell> = vec![n.into(), sigma.into(), alpha.into(), eps.into()];
                match pit_report(n, sigma, alpha, eps) {
                    Ok(p) => t.push(
                        head.into_iter()
                            .chain([
                                true.into(),
                                p.right_zero.into(),
                                p.min_rho.into(),
                                p.min_value.into(),
                                p.left_epsilon_bound.into(),
                            ])
                            .collect(),
                    ),
                    Err(Error::NoPit) => t.push(
                        head.into_iter()
                            .chain([false.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty])
                            .collect(),
                    ),
                    Err(e) => return Err(e),
                }
                n += step;
            }
            emit(out_path(&r, &c)?, &t.to_csv())?;
        }
        Command::Spline { common: c } => {
            let r = Resolver::new(&c)?;
            let n = r.get(c.n, "n", 21)?;
            let pts = optimal_spline(
                n,
                r.get(c.sigma, "sigma", 10.0)?,
                rho_range(&r, &c, -3.0, 3.0)?,
                r.get(c.points, "points", 121)?,
            )?;
            emit(out_path(&r, &c)?, &spline_table(n, &pts).to_csv())?;
        }
        Command::Ladder { common: c } => {
            let r = Resolver::new(&c)?;
            let t = ladder_table(
                r.get(c.n, "n", 21)?,
                rho_range(&r, &c, -0.5, 0.5)?,
                r.get(c.points, "points", 100)?,
            )?;
            eprintln!(
                "agreement_rate={} disagreements={} max_class_gap={}",
                t.agreement_rate(),
                t.disagreements(),
                t.max_class_gap()
            );
            emit(out_path(&r, &c)?, &t.to_table().to_csv())?;
        }
        Command::Sensitivity { common: c } => {
            let r = Resolver::new(&c)?;
            let rows =
                sensitivity_table(rho_range(&r, &c, -3.0, 3.0)?, r.get(c.points, "points", 121)?)?;
            eprintln!(
                "matched_normal_density = phi(rho) * {} (equal to minus_derivative at rho = 0)",
                vise::experiments::matched_density_scale()
            );
            emit(out_path(&r, &c)?, &sensitivity_csv(&rows).to_csv())?;
        }
        Command::Simulate { common: c, rho, steps, trials, threads, initial_capital, ruin_level } => {
            let r = Resolver::new(&c)?;
            let n = r.get(c.n, "n", 21)?;
            let sigma = r.get(c.sigma, "sigma", 10.0)?;
            let alpha = r.get(c.alpha, "alpha", 0.5)?;
            let seed = r.get(c.seed, "seed", 1)?;
            let rule = VotingRule::new(n, alpha)?;
            let rhos = match r.opt(rho, "rho")? {
                Some(x) => vec![x],
                None => grid(
                    r.get(c.rho_min, "rho-min", -1.0)?,
                    r.get(c.rho_max, "rho-max", 1.0)?,
                    r.get(c.points, "points", 5)?,
                )?,
            };
            let (def_steps, def_trials) = split_budget(r.get(c.proposals, "proposals", 100_000)?);
            let steps = r.get(steps, "steps", def_steps)?;
            let trials = r.get(trials, "trials", def_trials)?;
            let threads = r.opt(threads, "threads")?;
            let initial = r.get(initial_capital, "initial-capital", 0.0)?;
            let ruin = r.get(ruin_level, "ruin-level", 0.0)?;
            let mut t = Table::new(&[
                "rho",
                "mu",
                "n",
                "sigma",
                "alpha",
                "steps",
                "trials",
                "seed",
                "mean_step_increment",
                "std_error",
                "exact_value",
                "acceptance_rate",
                "mean_final_capital",
                "ruined_count_mean",
                "gini_final",
            ]);
            for (i, &rho) in rhos.iter().enumerate() {
                let env = Environment::from_rho(rho, sigma)?;
                let point = point_seed(seed, i as u64);
                let mut cfg = SimulationConfig::new(env, rule, steps, trials, point);
                cfg.initial_capital = initial;
                cfg.ruin_level = ruin;
                let s = run_simulation_with_threads(&cfg, threads)?;
                let exact = expected_increment_exact(&env, &rule)?.value();
                t.push(vec![
                    rho.into(),
                    env.mu().into(),
                    n.into(),
                    sigma.into(),
                    alpha.into(),
                    steps.into(),
                    trials.into(),
                    Cell::Text(point.to_string()),
                    s.mean_step_increment.into(),
                    s.std_error.into(),
                    exact.into(),
                    s.acceptance_rate.into(),
                    s.mean_final_capital.into(),
                    s.ruined_count_mean.into(),
                    s.gini_final.into(),
                ]);
            }
            emit(out_path(&r, &c)?, &t.to_csv())?;
        }
        Command::Verify { common: c, se_tolerance, corrupt_cdf } => {
            let r = Resolver::new(&c)?;
            let defaults = VerifyOptions::default();
            let opts = VerifyOptions {
                seed: r.get(c.seed, "seed", defaults.seed)?,
                budget: r.get(c.proposals, "proposals", defaults.budget)?,
                se_tolerance: r.get(se_tolerance, "se-tolerance", defaults.se_tolerance)?,
                ..defaults
            };
            let report = if corrupt_cdf {
                with_cdf_fault(|x| 0.5 * libm::erfc(-(x + 0.1) / std::f64::consts::SQRT_2), || {
                    verify(&opts)
                })
            } else {
                verify(&opts)
            };
            emit(out_path(&r, &c)?, &report.to_key_value())?;
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
