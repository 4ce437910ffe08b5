use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use swipt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(swipt_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn solve_round_trip_matches_core() {
    let params = swipt_params_default();
    let mut report: *mut SwiptReport = ptr::null_mut();
    unsafe {
        assert_eq!(swipt_solve(params, 0.3, 0.1, &mut report), SwiptStatus::Ok);
        let mut feasible = false;
        assert_eq!(swipt_report_is_feasible(report, &mut feasible), SwiptStatus::Ok);
        assert!(feasible);

        let mut best = SwiptAllocation::default();
        assert_eq!(swipt_report_best(report, &mut best), SwiptStatus::Ok);
        let direct = swipt_core::solve(
            &swipt_core::SystemParams::default(),
            &swipt_core::ChannelState { g1: 0.3, g2: 0.1 },
            &swipt_core::SolverConfig::default(),
        );
        assert_eq!(best.tau.to_bits(), direct.best.tau.to_bits());

        let (mut it, mut flops) = (0u64, 0u64);
        assert_eq!(swipt_report_totals(report, &mut it, &mut flops), SwiptStatus::Ok);
        assert_eq!(flops, 3 * it);

        assert_eq!(swipt_report_grid_len(report), 500);
        let mut gp = SwiptGridPoint::default();
        assert_eq!(swipt_report_grid_point(report, 499, &mut gp), SwiptStatus::Ok);
        assert!(gp.theta < 1.0 && gp.iterations <= 40);
        assert_eq!(swipt_report_grid_point(report, 500, &mut gp), SwiptStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));

        let mut kkt = SwiptKktResult::default();
        assert_eq!(swipt_verify_kkt(params, 0.3, 0.1, &best, &mut kkt), SwiptStatus::Ok);
        assert!(kkt.passed);

        swipt_report_free(report);
        swipt_params_free(params);
    }
}

#[test]
fn infeasible_channel_is_a_value() {
    let params = swipt_params_default();
    let mut report: *mut SwiptReport = ptr::null_mut();
    unsafe {
        assert_eq!(swipt_solve(params, 0.01, 0.1, &mut report), SwiptStatus::Ok);
        let mut feasible = true;
        swipt_report_is_feasible(report, &mut feasible);
        assert!(!feasible);
        let (mut theta0, mut lb) = (0.0, 1.0);
        assert_eq!(swipt_report_bounds(report, &mut theta0, &mut lb), SwiptStatus::Ok);
        assert!(theta0.is_nan());
        assert_eq!(lb, 0.0);
        assert_eq!(swipt_report_grid_len(report), 0);
        swipt_report_free(report);
        swipt_params_free(params);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut handle: *mut SwiptParams = ptr::null_mut();
        let st = swipt_params_new(500.0, 10.0, 5e-4, 1.5, 10.0, 10.0, 0.05, 0.05, &mut handle);
        assert_eq!(st, SwiptStatus::InvalidArgument);
        assert!(handle.is_null());
        assert!(last_error().contains("eta"));

        let st = swipt_params_new(500.0, 10.0, 5e-4, 0.8, 10.0, 10.0, 0.05, 0.05, ptr::null_mut());
        assert_eq!(st, SwiptStatus::NullPointer);

        let mut out = 0.0;
        assert_eq!(swipt_lower_bound_tau(ptr::null(), 0.3, 0.1, &mut out), SwiptStatus::NullPointer);

        let params = swipt_params_default();
        assert_eq!(swipt_lower_bound_tau(params, 0.3, 0.1, &mut out), SwiptStatus::Ok);
        assert!(last_error().is_empty());
        let expected = 1000.0 * (1.0f64 + 100.0 / 416.0).log2();
        assert!((out - expected).abs() <= 1e-9 * expected);

        let mut alloc = SwiptAllocation::default();
        let mut it = 0u32;
        assert_eq!(
            swipt_solve_fixed_theta(params, 0.3, 0.1, 0.01, &mut alloc, &mut it),
            SwiptStatus::DomainError
        );
        assert_eq!(
            swipt_solve_fixed_theta(params, -0.3, 0.1, 0.5, &mut alloc, &mut it),
            SwiptStatus::InvalidArgument
        );
        assert_eq!(swipt_solve_fixed_theta(params, 0.3, 0.1, 0.5, &mut alloc, &mut it), SwiptStatus::Ok);
        assert!(it > 0 && alloc.tau > 0.0);

        assert_eq!(swipt_params_set_solver(params, 0, 1e-12), SwiptStatus::InvalidArgument);
        assert_eq!(swipt_params_set_solver(params, 50, 1e-10), SwiptStatus::Ok);
        swipt_params_free(params);
        swipt_params_free(ptr::null_mut());
        swipt_report_free(ptr::null_mut());
    }
}

#[test]
fn monte_carlo_summary() {
    let params = swipt_params_default();
    unsafe {
        swipt_params_set_solver(params, 40, 1e-12);
        let mut a = SwiptMcSummary::default();
        let mut b = SwiptMcSummary::default();
        let st = swipt_average_throughput(params, 1.0, 0.4, 0.4, 32, 7, SwiptPolicy::Dynamic, &mut a);
        assert_eq!(st, SwiptStatus::Ok);
        swipt_average_throughput(params, 1.0, 0.4, 0.4, 32, 7, SwiptPolicy::Dynamic, &mut b);
        assert_eq!(a, b);
        assert_eq!(a.trials, 32);
        assert!(a.mean > 0.0 && a.std_error > 0.0);
        let st = swipt_average_throughput(params, 1.0, 0.4, 0.4, 0, 7, SwiptPolicy::Dynamic, &mut a);
        assert_eq!(st, SwiptStatus::InvalidArgument);
        swipt_params_free(params);
    }
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/swipt.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct SwiptParams SwiptParams;",
        "typedef struct SwiptReport SwiptReport;",
        "SWIPT_STATUS_DOMAIN_ERROR = 3",
        "swipt_solve(",
        "swipt_report_grid_point(",
        "swipt_verify_kkt(",
        "swipt_average_throughput(",
        "swipt_last_error_message(void)",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
    // Syntax-check the header with a C compiler when one is installed.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, "#include \"swipt.h\"\nint main(void) { return SWIPT_STATUS_OK; }\n").unwrap();
    let include = header.parent().unwrap();
    if let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include)
        .arg(&src)
        .status()
    {
        assert!(status.success(), "header does not compile");
    }
}
