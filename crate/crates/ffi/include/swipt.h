#ifndef SWIPT_H
#define SWIPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SWIPT_STATUS_OK = 0,
  SWIPT_STATUS_NULL_POINTER = 1,
  SWIPT_STATUS_INVALID_ARGUMENT = 2,
  SWIPT_STATUS_DOMAIN_ERROR = 3,
  SWIPT_STATUS_CONVERGENCE_ERROR = 4,
  SWIPT_STATUS_PANIC = 5,
} SwiptStatus;

typedef enum {
  SWIPT_POLICY_DYNAMIC = 0,
  SWIPT_POLICY_CONVENTIONAL_HALF = 1,
  SWIPT_POLICY_NO_CPC = 2,
} SwiptPolicy;

/**
 * System parameters plus solver settings.
 */
typedef struct SwiptParams SwiptParams;

typedef struct SwiptReport SwiptReport;

typedef struct {
  /**
   * Source rate (bits/s).
   */
  double tau;
  double lambda;
  /**
   * Relay transmit power (mW).
   */
  double pt;
  double theta;
} SwiptAllocation;

typedef struct {
  double theta;
  double pt;
  double tau;
  uint32_t iterations;
} SwiptGridPoint;

typedef struct {
  /**
   * Multipliers a1..a6.
   */
  double duals[6];
  double max_stationarity;
  double max_complementary_slackness;
  double max_primal_violation;
  bool passed;
} SwiptKktResult;

typedef struct {
  uint64_t trials;
  double mean;
  double std_error;
  double infeasible_fraction;
  double mean_lambda;
  double mean_pt;
  double mean_theta;
  double mean_theta0;
  double mean_lower_bound;
  uint64_t total_iterations;
  uint64_t total_flops;
} SwiptMcSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *swipt_last_error_message(void);

/**
 * Validated parameter set. Powers in mW, `t0` in seconds, `eps_*` in mW per
 * bit/s.
 *
 * # Safety
 * `out` must be null or point to writable storage for a handle.
 */
SwiptStatus swipt_params_new(double q,
                             double sigma2,
                             double t0,
                             double eta,
                             double pd,
                             double pe,
                             double eps_d,
                             double eps_e,
                             SwiptParams **out);

/**
 * Default parameter set (Q = 500 mW, σ² = 10 mW, T₀ = 500 µs, η = 0.8,
 * P_d = P_e = 10 mW, ε_d = ε_e = 0.05, n = 500). Never null.
 */
SwiptParams *swipt_params_default(void);

/**
 * # Safety
 * `params` must be null or a handle from this library not yet freed.
 */
void swipt_params_free(SwiptParams *params);

/**
 * Sets the θ grid size and the relative bisection tolerance.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
SwiptStatus swipt_params_set_solver(SwiptParams *params, size_t grid_levels, double tol_pt_rel);

/**
 * Grid search over θ. An infeasible channel is a successful call whose
 * report says so.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
SwiptStatus swipt_solve(const SwiptParams *params, double g1, double g2, SwiptReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void swipt_report_free(SwiptReport *report);

/**
 * # Safety
 * `report` must be a live handle; `feasible` must be writable.
 */
SwiptStatus swipt_report_is_feasible(const SwiptReport *report, bool *feasible);

/**
 * Best allocation; all zeros when infeasible.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
SwiptStatus swipt_report_best(const SwiptReport *report, SwiptAllocation *out);

/**
 * θ₀ (NaN when undefined) and the closed-form lower bound.
 *
 * # Safety
 * `report` must be a live handle; outputs must be writable.
 */
SwiptStatus swipt_report_bounds(const SwiptReport *report, double *theta0, double *lower_bound_tau);

/**
 * # Safety
 * `report` must be a live handle; outputs must be writable.
 */
SwiptStatus swipt_report_totals(const SwiptReport *report, uint64_t *iterations, uint64_t *flops);

/**
 * Number of visited grid points; 0 for a null or infeasible report.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t swipt_report_grid_len(const SwiptReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
SwiptStatus swipt_report_grid_point(const SwiptReport *report, size_t index, SwiptGridPoint *out);

/**
 * Optimal allocation at a fixed θ ∈ (θ₀, 1).
 *
 * # Safety
 * `params` must be a live handle; outputs must be writable.
 */
SwiptStatus swipt_solve_fixed_theta(const SwiptParams *params,
                                    double g1,
                                    double g2,
                                    double theta,
                                    SwiptAllocation *out,
                                    uint32_t *iterations);

/**
 * Closed-form lower bound on the optimal rate (0 when no surplus).
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
SwiptStatus swipt_lower_bound_tau(const SwiptParams *params, double g1, double g2, double *out);

/**
 * KKT check of an interior allocation with residual tolerance 1e-6.
 *
 * # Safety
 * `params` and `alloc` must be valid; `out` must be writable.
 */
SwiptStatus swipt_verify_kkt(const SwiptParams *params,
                             double g1,
                             double g2,
                             const SwiptAllocation *alloc,
                             SwiptKktResult *out);

/**
 * Mean throughput over `trials` Rician draws. `k` may be `INFINITY`.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
SwiptStatus swipt_average_throughput(const SwiptParams *params,
                                     double k,
                                     double omega1,
                                     double omega2,
                                     uint64_t trials,
                                     uint64_t seed,
                                     SwiptPolicy policy,
                                     SwiptMcSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIPT_H */
