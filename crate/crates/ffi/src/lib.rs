//! C ABI over the `vise` engine.
//!
//! Every fallible call returns a [`ViseStatus`] and writes its result
//! through an out-pointer. The message of the most recent failure on the
//! calling thread is available from [`vise_last_error_message`].
//! Simulations are driven through the opaque [`ViseSimulation`] handle.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vise::analytic::{self, Validity};
use vise::experiments::pit_report;
use vise::simulator::{run_simulation_with_threads, SimulationConfig};
use vise::{Environment, Error, VotingRule};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DegenerateEnvironment = 3,
    NoPit = 4,
    Internal = 5,
    Panic = 6,
}

/// Trust tier of the normal approximation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViseValidity {
    Weak = 0,
    Acceptable = 1,
    Strong = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ViseThresholdEstimate {
    pub alpha_hat: f64,
    pub alpha_ladder: f64,
    pub alpha_bruteforce: f64,
    pub class_halfwidth: f64,
    pub ladder_class: i64,
    pub bruteforce_class: i64,
    pub best_value: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VisePitReport {
    pub right_zero: f64,
    pub min_rho: f64,
    pub min_value: f64,
    pub left_epsilon_bound: f64,
    pub epsilon: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ViseSimulationSummary {
    pub mean_step_increment: f64,
    pub std_error: f64,
    pub acceptance_rate: f64,
    pub mean_final_capital: f64,
    pub ruined_count_mean: f64,
    /// NaN when the Gini coefficient is undefined.
    pub gini_final: f64,
}

/// Opaque simulation handle.
pub struct ViseSimulation {
    config: SimulationConfig,
    threads: Option<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> ViseStatus {
    match err {
        Error::DegenerateEnvironment { .. } => ViseStatus::DegenerateEnvironment,
        Error::NoPit => ViseStatus::NoPit,
        Error::Io(_) => ViseStatus::Internal,
        _ => ViseStatus::InvalidArgument,
    }
}

/// Runs `body`, mapping errors and panics to status codes.
fn guard(body: impl FnOnce() -> Result<(), Error>) -> ViseStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ViseStatus::Ok,
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_last_error(e.to_string());
            s
        }
        Err(_) => {
            set_last_error("panic inside vise".into());
            ViseStatus::Panic
        }
    }
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(Error::Domain("null out-pointer".into()));
    }
    // SAFETY: checked non-null; the caller guarantees it is valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

macro_rules! null_check {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_last_error("null pointer argument".into());
            return ViseStatus::NullPointer;
        }
    };
}

fn model(mu: f64, sigma: f64, n: u64, alpha: f64) -> Result<(Environment, VotingRule), Error> {
    Ok((Environment::new(mu, sigma)?, VotingRule::new(n, alpha)?))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn vise_status_string(status: ViseStatus) -> *const c_char {
    let s: &'static CStr = match status {
        ViseStatus::Ok => c"ok",
        ViseStatus::NullPointer => c"null pointer",
        ViseStatus::InvalidArgument => c"invalid argument",
        ViseStatus::DegenerateEnvironment => c"degenerate environment",
        ViseStatus::NoPit => c"no pit of losses",
        ViseStatus::Internal => c"internal error",
        ViseStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn vise_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: caller guarantees `buf` holds `len` bytes; n < len.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

#[no_mangle]
pub extern "C" fn vise_std_normal_pdf(x: f64) -> f64 {
    vise::std_normal_pdf(x)
}

#[no_mangle]
pub extern "C" fn vise_std_normal_cdf(x: f64) -> f64 {
    vise::std_normal_cdf(x)
}

/// Exact expected one-step increment of an agent.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_expected_increment_exact(
    mu: f64,
    sigma: f64,
    n: u64,
    alpha: f64,
    out: *mut f64,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let (env, rule) = model(mu, sigma, n, alpha)?;
        write_out(out, analytic::expected_increment_exact(&env, &rule)?.value())
    })
}

/// Normal approximation of the expected one-step increment.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_expected_increment_approx(
    mu: f64,
    sigma: f64,
    n: u64,
    alpha: f64,
    out: *mut f64,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let (env, rule) = model(mu, sigma, n, alpha)?;
        write_out(out, analytic::expected_increment_approx(&env, &rule)?.value())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_approx_validity(
    mu: f64,
    sigma: f64,
    n: u64,
    alpha: f64,
    out: *mut ViseValidity,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let (env, rule) = model(mu, sigma, n, alpha)?;
        let v = match analytic::approx_validity(&env, &rule) {
            Validity::Weak => ViseValidity::Weak,
            Validity::Acceptable => ViseValidity::Acceptable,
            Validity::Strong => ViseValidity::Strong,
        };
        write_out(out, v)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_neutral_mean_increment(sigma: f64, n: u64, out: *mut f64) -> ViseStatus {
    null_check!(out);
    guard(|| write_out(out, analytic::neutral_mean_increment(sigma, n)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_rescaled_curve_value(
    base_n: u64,
    target_n: u64,
    rho: f64,
    sigma: f64,
    alpha: f64,
    out: *mut f64,
) -> ViseStatus {
    null_check!(out);
    guard(|| write_out(out, analytic::rescaled_curve_value(base_n, target_n, rho, sigma, alpha)?))
}

#[no_mangle]
pub extern "C" fn vise_optimal_threshold_estimate(rho: f64) -> f64 {
    analytic::optimal_threshold_estimate(rho)
}

#[no_mangle]
pub extern "C" fn vise_optimal_threshold_ladder(rho: f64, n: u64) -> f64 {
    analytic::optimal_threshold_ladder(rho, n)
}

#[no_mangle]
pub extern "C" fn vise_threshold_sensitivity(rho: f64) -> f64 {
    analytic::threshold_sensitivity(rho)
}

#[no_mangle]
pub extern "C" fn vise_foc_residual(alpha: f64, rho: f64) -> f64 {
    analytic::foc_residual(alpha, rho)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_optimal_threshold_bruteforce(
    mu: f64,
    sigma: f64,
    n: u64,
    out: *mut ViseThresholdEstimate,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let t = analytic::optimal_threshold_bruteforce(&Environment::new(mu, sigma)?, n)?;
        write_out(
            out,
            ViseThresholdEstimate {
                alpha_hat: t.alpha_hat,
                alpha_ladder: t.alpha_ladder,
                alpha_bruteforce: t.alpha_bruteforce,
                class_halfwidth: t.class_halfwidth,
                ladder_class: t.ladder_class,
                bruteforce_class: t.bruteforce_class,
                best_value: t.best_value,
            },
        )
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_max_expected_increment(
    mu: f64,
    sigma: f64,
    n: u64,
    out: *mut f64,
) -> ViseStatus {
    null_check!(out);
    guard(|| write_out(out, analytic::max_expected_increment(&Environment::new(mu, sigma)?, n)?))
}

/// Returns `ViseStatus::NoPit` when the exact curve never goes negative.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_pit_report(
    n: u64,
    sigma: f64,
    alpha: f64,
    epsilon: f64,
    out: *mut VisePitReport,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let p = pit_report(n, sigma, alpha, epsilon)?;
        write_out(
            out,
            VisePitReport {
                right_zero: p.right_zero,
                min_rho: p.min_rho,
                min_value: p.min_value,
                left_epsilon_bound: p.left_epsilon_bound,
                epsilon: p.epsilon,
            },
        )
    })
}

/// Creates a simulation handle; free it with [`vise_simulation_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn vise_simulation_new(
    mu: f64,
    sigma: f64,
    n: u64,
    alpha: f64,
    steps: u64,
    trials: u64,
    seed: u64,
    out: *mut *mut ViseSimulation,
) -> ViseStatus {
    null_check!(out);
    guard(|| {
        let (env, rule) = model(mu, sigma, n, alpha)?;
        let config = SimulationConfig::new(env, rule, steps, trials, seed);
        config.validate()?;
        let handle = Box::into_raw(Box::new(ViseSimulation { config, threads: None }));
        write_out(out, handle)
    })
}

/// # Safety
/// `sim` must be a live handle from [`vise_simulation_new`].
#[no_mangle]
pub unsafe extern "C" fn vise_simulation_set_capital(
    sim: *mut ViseSimulation,
    initial_capital: f64,
    ruin_level: f64,
) -> ViseStatus {
    null_check!(sim);
    guard(|| {
        // SAFETY: non-null live handle per the contract above.
        let sim = unsafe { &mut *sim };
        let mut cfg = sim.config.clone();
        cfg.initial_capital = initial_capital;
        cfg.ruin_level = ruin_level;
        cfg.validate()?;
        sim.config = cfg;
        Ok(())
    })
}

/// Worker threads for subsequent runs; 0 selects the global pool.
///
/// # Safety
/// `sim` must be a live handle from [`vise_simulation_new`].
#[no_mangle]
pub unsafe extern "C" fn vise_simulation_set_threads(sim: *mut ViseSimulation, threads: usize) -> ViseStatus {
    null_check!(sim);
    // SAFETY: non-null live handle per the contract above.
    let sim = unsafe { &mut *sim };
    sim.threads = (threads > 0).then_some(threads);
    ViseStatus::Ok
}

/// # Safety
/// `sim` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vise_simulation_run(
    sim: *const ViseSimulation,
    out: *mut ViseSimulationSummary,
) -> ViseStatus {
    null_check!(sim, out);
    guard(|| {
        // SAFETY: non-null live handle per the contract above.
        let sim = unsafe { &*sim };
        let s = run_simulation_with_threads(&sim.config, sim.threads)?;
        write_out(
            out,
            ViseSimulationSummary {
                mean_step_increment: s.mean_step_increment,
                std_error: s.std_error,
                acceptance_rate: s.acceptance_rate,
                mean_final_capital: s.mean_final_capital,
                ruined_count_mean: s.ruined_count_mean,
                gini_final: s.gini_final.unwrap_or(f64::NAN),
            },
        )
    })
}

/// # Safety
/// `sim` must be null or a handle from [`vise_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vise_simulation_free(sim: *mut ViseSimulation) {
    if !sim.is_null() {
        // SAFETY: handle came from Box::into_raw in vise_simulation_new.
        drop(unsafe { Box::from_raw(sim) });
    }
}
