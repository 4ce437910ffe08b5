//! C ABI for `swipt-core`.
//!
//! Parameter sets and solve reports are opaque handles owned by the caller
//! and released with the matching `*_free` function. Every entry point
//! returns a [`SwiptStatus`]; on failure [`swipt_last_error_message`] holds a
//! description for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use swipt_core::mc::{average_throughput, FadingSpec, McConfig, Policy};
use swipt_core::solver::{verify_kkt, KktTolerance};
use swipt_core::{bounds, Allocation, ChannelState, SolveReport, SolverConfig, SwiptError, SystemParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    ConvergenceError = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiptPolicy {
    Dynamic = 0,
    ConventionalHalf = 1,
    NoCpc = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwiptAllocation {
    /// Source rate (bits/s).
    pub tau: f64,
    pub lambda: f64,
    /// Relay transmit power (mW).
    pub pt: f64,
    pub theta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwiptGridPoint {
    pub theta: f64,
    pub pt: f64,
    pub tau: f64,
    pub iterations: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwiptMcSummary {
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
    pub infeasible_fraction: f64,
    pub mean_lambda: f64,
    pub mean_pt: f64,
    pub mean_theta: f64,
    pub mean_theta0: f64,
    pub mean_lower_bound: f64,
    pub total_iterations: u64,
    pub total_flops: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwiptKktResult {
    /// Multipliers a1..a6.
    pub duals: [f64; 6],
    pub max_stationarity: f64,
    pub max_complementary_slackness: f64,
    pub max_primal_violation: f64,
    pub passed: bool,
}

/// System parameters plus solver settings.
pub struct SwiptParams {
    params: SystemParams,
    solver: SolverConfig,
}

pub struct SwiptReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &SwiptError) -> SwiptStatus {
    match err {
        SwiptError::Domain(_) => SwiptStatus::DomainError,
        SwiptError::Convergence(_) => SwiptStatus::ConvergenceError,
        SwiptError::Config(_) => SwiptStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SwiptStatus, String)>) -> SwiptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SwiptStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SwiptStatus::Panic
        }
    }
}

type Step<T> = Result<T, (SwiptStatus, String)>;

fn core<T>(r: swipt_core::Result<T>) -> Step<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (SwiptStatus, String) {
    (SwiptStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Step<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(p: *mut T, name: &str, value: T) -> Step<()> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(value);
    Ok(())
}

fn channel(g1: f64, g2: f64) -> Step<ChannelState> {
    core(ChannelState::new(g1, g2))
}

fn to_alloc(a: &Allocation) -> SwiptAllocation {
    SwiptAllocation {
        tau: a.tau,
        lambda: a.lambda,
        pt: a.pt,
        theta: a.theta,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn swipt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Validated parameter set. Powers in mW, `t0` in seconds, `eps_*` in mW per
/// bit/s.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn swipt_params_new(
    q: f64,
    sigma2: f64,
    t0: f64,
    eta: f64,
    pd: f64,
    pe: f64,
    eps_d: f64,
    eps_e: f64,
    out: *mut *mut SwiptParams,
) -> SwiptStatus {
    guard(|| {
        let params = SystemParams {
            q,
            sigma2,
            t0,
            eta,
            pd,
            pe,
            eps_d,
            eps_e,
        };
        core(params.validate())?;
        let handle = Box::into_raw(Box::new(SwiptParams {
            params,
            solver: SolverConfig::default(),
        }));
        if out.is_null() {
            drop(Box::from_raw(handle));
            return Err(null("out"));
        }
        out.write(handle);
        Ok(())
    })
}

/// Default parameter set (Q = 500 mW, σ² = 10 mW, T₀ = 500 µs, η = 0.8,
/// P_d = P_e = 10 mW, ε_d = ε_e = 0.05, n = 500). Never null.
#[no_mangle]
pub extern "C" fn swipt_params_default() -> *mut SwiptParams {
    Box::into_raw(Box::new(SwiptParams {
        params: SystemParams::default(),
        solver: SolverConfig::default(),
    }))
}

/// # Safety
/// `params` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swipt_params_free(params: *mut SwiptParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Sets the θ grid size and the relative bisection tolerance.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swipt_params_set_solver(
    params: *mut SwiptParams,
    grid_levels: usize,
    tol_pt_rel: f64,
) -> SwiptStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let solver = SolverConfig {
            grid_levels,
            tol_pt_rel,
            ..p.solver
        };
        core(solver.validate())?;
        p.solver = solver;
        Ok(())
    })
}

/// Grid search over θ. An infeasible channel is a successful call whose
/// report says so.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_solve(
    params: *const SwiptParams,
    g1: f64,
    g2: f64,
    out: *mut *mut SwiptReport,
) -> SwiptStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let ch = channel(g1, g2)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = swipt_core::solve(&p.params, &ch, &p.solver);
        out.write(Box::into_raw(Box::new(SwiptReport(report))));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_free(report: *mut SwiptReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle; `feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_is_feasible(report: *const SwiptReport, feasible: *mut bool) -> SwiptStatus {
    guard(|| write_out(feasible, "feasible", deref(report, "report")?.0.is_feasible()))
}

/// Best allocation; all zeros when infeasible.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_best(report: *const SwiptReport, out: *mut SwiptAllocation) -> SwiptStatus {
    guard(|| write_out(out, "out", to_alloc(&deref(report, "report")?.0.best)))
}

/// θ₀ (NaN when undefined) and the closed-form lower bound.
///
/// # Safety
/// `report` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_bounds(
    report: *const SwiptReport,
    theta0: *mut f64,
    lower_bound_tau: *mut f64,
) -> SwiptStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        write_out(theta0, "theta0", r.theta0)?;
        write_out(lower_bound_tau, "lower_bound_tau", r.lower_bound_tau)
    })
}

/// # Safety
/// `report` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_totals(
    report: *const SwiptReport,
    iterations: *mut u64,
    flops: *mut u64,
) -> SwiptStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        write_out(iterations, "iterations", r.total_iterations)?;
        write_out(flops, "flops", r.total_flops)
    })
}

/// Number of visited grid points; 0 for a null or infeasible report.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_grid_len(report: *const SwiptReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.diagnostics.len())
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_report_grid_point(
    report: *const SwiptReport,
    index: usize,
    out: *mut SwiptGridPoint,
) -> SwiptStatus {
    guard(|| {
        let r = &deref(report, "report")?.0;
        let g = r.diagnostics.get(index).ok_or_else(|| {
            (
                SwiptStatus::InvalidArgument,
                format!("index {index} out of range ({})", r.diagnostics.len()),
            )
        })?;
        write_out(
            out,
            "out",
            SwiptGridPoint {
                theta: g.theta,
                pt: g.pt,
                tau: g.tau,
                iterations: g.iterations,
            },
        )
    })
}

/// Optimal allocation at a fixed θ ∈ (θ₀, 1).
///
/// # Safety
/// `params` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_solve_fixed_theta(
    params: *const SwiptParams,
    g1: f64,
    g2: f64,
    theta: f64,
    out: *mut SwiptAllocation,
    iterations: *mut u32,
) -> SwiptStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let ch = channel(g1, g2)?;
        let (a, it) = core(swipt_core::solve_fixed_theta(&p.params, &ch, theta, &p.solver))?;
        write_out(out, "out", to_alloc(&a))?;
        write_out(iterations, "iterations", it)
    })
}

/// Closed-form lower bound on the optimal rate (0 when no surplus).
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_lower_bound_tau(
    params: *const SwiptParams,
    g1: f64,
    g2: f64,
    out: *mut f64,
) -> SwiptStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let ch = channel(g1, g2)?;
        write_out(out, "out", bounds::lower_bound_tau(&p.params, &ch))
    })
}

/// KKT check of an interior allocation with residual tolerance 1e-6.
///
/// # Safety
/// `params` and `alloc` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swipt_verify_kkt(
    params: *const SwiptParams,
    g1: f64,
    g2: f64,
    alloc: *const SwiptAllocation,
    out: *mut SwiptKktResult,
) -> SwiptStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let a = deref(alloc, "alloc")?;
        let ch = channel(g1, g2)?;
        let alloc = Allocation {
            tau: a.tau,
            lambda: a.lambda,
            pt: a.pt,
            theta: a.theta,
        };
        let r = core(verify_kkt(&p.params, &ch, &alloc, &KktTolerance::default()))?;
        write_out(
            out,
            "out",
            SwiptKktResult {
                duals: r.duals,
                max_stationarity: r.max_stationarity(),
                max_complementary_slackness: r.max_complementary_slackness(),
                max_primal_violation: r.max_primal_violation(),
                passed: r.passed,
            },
        )
    })
}

/// Mean throughput over `trials` Rician draws. `k` may be `INFINITY`.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn swipt_average_throughput(
    params: *const SwiptParams,
    k: f64,
    omega1: f64,
    omega2: f64,
    trials: u64,
    seed: u64,
    policy: SwiptPolicy,
    out: *mut SwiptMcSummary,
) -> SwiptStatus {
    guard(|| {
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trials = usize::try_from(trials).map_err(|_| (SwiptStatus::InvalidArgument, "trials too large".into()))?;
        let mc = McConfig {
            trials,
            seed,
            policy: match policy {
                SwiptPolicy::Dynamic => Policy::Dynamic,
                SwiptPolicy::ConventionalHalf => Policy::ConventionalHalf,
                SwiptPolicy::NoCpc => Policy::NoCpc,
            },
            solver: p.solver,
        };
        let fading = FadingSpec { k, omega1, omega2 };
        let s = core(average_throughput(&p.params, &fading, &mc))?;
        write_out(
            out,
            "out",
            SwiptMcSummary {
                trials: s.trials as u64,
                mean: s.mean,
                std_error: s.std_error,
                infeasible_fraction: s.infeasible_fraction,
                mean_lambda: s.mean_lambda,
                mean_pt: s.mean_pt,
                mean_theta: s.mean_theta,
                mean_theta0: s.mean_theta0,
                mean_lower_bound: s.mean_lower_bound,
                total_iterations: s.total_iterations,
                total_flops: s.total_flops,
            },
        )
    })
}
