//! C ABI over `jumphedge-core`.
//!
//! Every function returns a [`JhStatus`]; results go through out-pointers.
//! After a non-`JH_OK` status, `jh_last_error_message` describes the failure
//! on the calling thread. Handles are opaque and must be released with their
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use jumphedge_core::experiment::{run_experiment, Experiment, ExperimentConfig, RunOptions};
use jumphedge_core::optimizer::{budget_rescale, minimize_lagrangian, symmetric_power_barrier, LagrangianProblem};
use jumphedge_core::stable::{mean_exit_time, mean_squared_integral, overshoot_moment, Barriers, StableLaw};
use jumphedge_core::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JhStatus {
    JhOk = 0,
    JhNullPointer = 1,
    JhInvalidParameter = 2,
    JhAsymmetricLaw = 3,
    JhInfiniteMoment = 4,
    /// Step caps, search boxes, quadrature tolerance, fit degeneracy.
    JhNumericalBudget = 5,
    JhConfig = 6,
    JhIo = 7,
    JhInternal = 8,
    JhPanic = 9,
}

/// A strictly stable law.
pub struct JhStableLaw(StableLaw);

/// A validated experiment configuration.
pub struct JhExperiment {
    exp: Experiment,
    text: String,
}

/// Minimizer of the pointwise barrier problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JhOptimalBarriers {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub theta: f64,
    pub objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> JhStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::SingularPoint(_)
        | Error::HypothesisViolation(_)
        | Error::RuleViolation { .. } => JhStatus::JhInvalidParameter,
        Error::AsymmetricLaw { .. } => JhStatus::JhAsymmetricLaw,
        Error::InfiniteMoment { .. } => JhStatus::JhInfiniteMoment,
        Error::Config { .. } => JhStatus::JhConfig,
        Error::Io(_) => JhStatus::JhIo,
        e if e.is_numerical_budget() => JhStatus::JhNumericalBudget,
        _ => JhStatus::JhInternal,
    }
}

/// Runs `f`, mapping errors and panics onto statuses.
fn guard<F: FnOnce() -> Result<(), JhStatus>>(f: F) -> JhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            JhStatus::JhOk
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside jumphedge");
            JhStatus::JhPanic
        }
    }
}

fn fail(e: Error) -> JhStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> JhStatus {
    set_error(&format!("`{what}` is NULL"));
    JhStatus::JhNullPointer
}

/// # Safety
/// `p` must be NULL or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), JhStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `p` must be NULL or point to a live `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, JhStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `s` must be NULL or a NUL-terminated string.
unsafe fn string(s: *const c_char, what: &str) -> Result<String, JhStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map(str::to_owned).map_err(|_| {
        set_error(&format!("`{what}` is not valid UTF-8"));
        JhStatus::JhInvalidParameter
    })
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn jh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn jh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Law with Lévy density `(c₊ 1{x>0} + c₋ 1{x<0}) |x|^{-1-α}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_stable_law_new(
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    out: *mut *mut JhStableLaw,
) -> JhStatus {
    guard(|| {
        let law = StableLaw::new(alpha, c_plus, c_minus).map_err(fail)?;
        write(out, Box::into_raw(Box::new(JhStableLaw(law))), "out")
    })
}

/// Symmetric law with scale `σ`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_stable_law_symmetric(alpha: f64, sigma: f64, out: *mut *mut JhStableLaw) -> JhStatus {
    guard(|| {
        let law = StableLaw::symmetric(alpha, sigma).map_err(fail)?;
        write(out, Box::into_raw(Box::new(JhStableLaw(law))), "out")
    })
}

/// # Safety
/// `law` must be NULL or a handle from `jh_stable_law_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jh_stable_law_free(law: *mut JhStableLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// # Safety
/// `law` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_stable_law_sigma(law: *const JhStableLaw, out: *mut f64) -> JhStatus {
    guard(|| write(out, borrow(law, "law")?.0.sigma(), "out"))
}

/// # Safety
/// `law` must be a live handle and `out` valid for writes.
unsafe fn exit_functional(
    law: *const JhStableLaw,
    lower: f64,
    upper: f64,
    out: *mut f64,
    f: impl FnOnce(&StableLaw, &Barriers) -> jumphedge_core::Result<f64>,
) -> JhStatus {
    guard(|| {
        let law = borrow(law, "law")?;
        let b = Barriers::new(lower, upper).map_err(fail)?;
        write(out, f(&law.0, &b).map_err(fail)?, "out")
    })
}

/// Expected exit time from `(-lower, upper)`.
///
/// # Safety
/// `law` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_mean_exit_time(law: *const JhStableLaw, lower: f64, upper: f64, out: *mut f64) -> JhStatus {
    exit_functional(law, lower, upper, out, mean_exit_time)
}

/// `E[∫_0^τ X_t² dt]` for the exit time `τ` of `(-lower, upper)`.
///
/// # Safety
/// `law` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_mean_squared_integral(
    law: *const JhStableLaw,
    lower: f64,
    upper: f64,
    out: *mut f64,
) -> JhStatus {
    exit_functional(law, lower, upper, out, mean_squared_integral)
}

/// `E[|X_τ|^β]`.
///
/// # Safety
/// `law` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_overshoot_moment(
    law: *const JhStableLaw,
    lower: f64,
    upper: f64,
    beta: f64,
    out: *mut f64,
) -> JhStatus {
    exit_functional(law, lower, upper, out, |l, b| overshoot_moment(l, b, beta))
}

/// Barriers minimizing `A f/g + c λ u^β/g`.
///
/// # Safety
/// `law` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_minimize_lagrangian(
    law: *const JhStableLaw,
    a_coef: f64,
    lambda: f64,
    multiplier: f64,
    beta: f64,
    out: *mut JhOptimalBarriers,
) -> JhStatus {
    guard(|| {
        let law = borrow(law, "law")?;
        let p = LagrangianProblem::new(a_coef, lambda, multiplier, beta, law.0).map_err(fail)?;
        let o = minimize_lagrangian(&p).map_err(fail)?;
        write(
            out,
            JhOptimalBarriers {
                lower: o.barriers.lower,
                upper: o.barriers.upper,
                center: o.center,
                theta: o.theta,
                objective: o.objective,
            },
            "out",
        )
    })
}

/// `c (λ/A)^{1/(2+α-β)}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_symmetric_power_barrier(
    a_coef: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
    c: f64,
    out: *mut f64,
) -> JhStatus {
    guard(|| write(out, symmetric_power_barrier(a_coef, lambda, alpha, beta, c).map_err(fail)?, "out"))
}

/// Rescales optimal barriers from multiplier `c_old` to `c_new`.
///
/// # Safety
/// `out_lower` and `out_upper` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_budget_rescale(
    lower: f64,
    upper: f64,
    c_old: f64,
    c_new: f64,
    alpha: f64,
    beta: f64,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> JhStatus {
    guard(|| {
        let b = Barriers::new(lower, upper).map_err(fail)?;
        let r = budget_rescale(&b, c_old, c_new, alpha, beta).map_err(fail)?;
        write(out_lower, r.lower, "out_lower")?;
        write(out_upper, r.upper, "out_upper")
    })
}

/// Parses and validates a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_experiment_from_json(json: *const c_char, out: *mut *mut JhExperiment) -> JhStatus {
    guard(|| {
        let text = string(json, "json")?;
        let exp = ExperimentConfig::from_json(&text)
            .and_then(|c| c.validate())
            .map_err(fail)?;
        write(out, Box::into_raw(Box::new(JhExperiment { exp, text })), "out")
    })
}

/// # Safety
/// `exp` must be NULL or a handle from `jh_experiment_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jh_experiment_free(exp: *mut JhExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Number of paths per estimate.
///
/// # Safety
/// `exp` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jh_experiment_n_paths(exp: *const JhExperiment, out: *mut u64) -> JhStatus {
    guard(|| write(out, borrow(exp, "exp")?.exp.config.n_paths, "out"))
}

/// Runs the experiment and writes its result files into `out_dir`.
/// `threads = 0` uses every core; output does not depend on it.
///
/// # Safety
/// `exp` must be a live handle and `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn jh_experiment_run(exp: *const JhExperiment, out_dir: *const c_char, threads: u32) -> JhStatus {
    guard(|| {
        let exp = borrow(exp, "exp")?;
        let dir = PathBuf::from(string(out_dir, "out_dir")?);
        let opts = RunOptions {
            threads: (threads > 0).then_some(threads as usize),
            out_dir: Some(dir),
            seed: None,
        };
        run_experiment(&exp.exp, &exp.text, "config.json", &opts)
            .map(|_| ())
            .map_err(fail)
    })
}
