//! Near-optimal allocation by bisection at fixed θ and a grid search over θ.
//!
//! For a fixed time ratio the problem is convex. Its optimum has both hop
//! rates equal to τ and the energy constraint tight, which leaves a single
//! unknown, the transmit power, found as the root of
//! [`energy_balance_residual`]. The outer search evaluates `n` interior grid
//! points of (θ₀, 1) and keeps the first best one.

mod kkt;

pub use kkt::{verify_kkt, KktReport, KktTolerance};

use crate::bounds::lower_bound_tau;
use crate::error::{config, domain, Result};
use crate::model::{
    energy_balance_residual, matched_rate, matched_split_unchecked, pt_ceiling, theta0, Allocation,
    ChannelState, SystemParams,
};

/// FLOPs charged per bisection step: one midpoint and one comparison update.
pub const FLOPS_PER_BISECTION_STEP: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of interior θ grid points.
    pub grid_levels: usize,
    /// Bisection stops once the bracket is narrower than this fraction of its
    /// initial width.
    pub tol_pt_rel: f64,
    /// Tolerance used when checking that the constraints are tight.
    pub tol_constraint: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_levels: 500,
            tol_pt_rel: 1e-12,
            tol_constraint: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_levels == 0 {
            return config("grid levels must be at least 1");
        }
        if !(self.tol_pt_rel > 0.0 && self.tol_pt_rel < 1.0) {
            return config(format!("tol_pt_rel must lie in (0, 1), got {}", self.tol_pt_rel));
        }
        if !(self.tol_constraint > 0.0) {
            return config("tol_constraint must be positive");
        }
        Ok(())
    }

    /// Upper bound on bisection steps per grid point, ⌈log₂(1/tol_pt_rel)⌉.
    pub fn max_bisection_steps(&self) -> u32 {
        (1.0 / self.tol_pt_rel).log2().ceil() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// ηQg₁ ≤ P_d: the harvested power never covers the decoder.
    InsufficientHarvest,
    /// g₂ = 0: nothing reaches the destination.
    NoRelayLink,
    /// A θ = 1/2 policy with θ₀ ≥ 1/2: the fixed split cannot power the decoder.
    HalfThetaExcluded,
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfeasibleReason::InsufficientHarvest => f.write_str("harvested power does not exceed decoder static power"),
            InfeasibleReason::NoRelayLink => f.write_str("relay to destination gain is zero"),
            InfeasibleReason::HalfThetaExcluded => f.write_str("theta = 1/2 lies outside the feasible interval"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Infeasible(InfeasibleReason),
    Feasible { theta0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
        }
    }
}

/// Outcome of one fixed-θ solve inside the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub theta: f64,
    pub pt: f64,
    pub tau: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub infeasible_reason: Option<InfeasibleReason>,
    /// Best allocation, or [`Allocation::ZERO`] when infeasible.
    pub best: Allocation,
    /// Lower end of the feasible θ interval; NaN when ηQg₁ ≤ P_d.
    pub theta0: f64,
    pub lower_bound_tau: f64,
    pub diagnostics: Vec<GridPoint>,
    pub total_iterations: u64,
    pub total_flops: u64,
}

impl SolveReport {
    pub(crate) fn infeasible(p: &SystemParams, ch: &ChannelState, reason: InfeasibleReason) -> Self {
        SolveReport {
            status: Status::Infeasible,
            infeasible_reason: Some(reason),
            best: Allocation::ZERO,
            theta0: theta0(p, ch).unwrap_or(f64::NAN),
            lower_bound_tau: lower_bound_tau(p, ch),
            diagnostics: Vec::new(),
            total_iterations: 0,
            total_flops: 0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Feasibility gate: a positive rate is possible iff ηQg₁ > P_d and g₂ > 0.
pub fn check_feasibility(p: &SystemParams, ch: &ChannelState) -> Feasibility {
    if p.full_harvest(ch) <= p.pd {
        return Feasibility::Infeasible(InfeasibleReason::InsufficientHarvest);
    }
    if ch.g2 <= 0.0 {
        return Feasibility::Infeasible(InfeasibleReason::NoRelayLink);
    }
    match theta0(p, ch) {
        Ok(theta0) => Feasibility::Feasible { theta0 },
        Err(_) => Feasibility::Infeasible(InfeasibleReason::InsufficientHarvest),
    }
}

/// i-th interior point (1-based) of an n-level grid on (θ₀, 1).
pub fn grid_theta(theta0: f64, i: usize, n: usize) -> f64 {
    theta0 + i as f64 * (1.0 - theta0) / (n as f64 + 1.0)
}

/// Upper end of the bisection bracket.
///
/// The ceiling where λ reaches 1, capped by the transmit power the static
/// energy budget can pay for. The cap keeps the bracket finite when the
/// ceiling overflows for θ near 1; the residual is nonpositive at both.
pub(crate) fn bracket_top(p: &SystemParams, ch: &ChannelState, theta: f64) -> f64 {
    let energy_limit = p.static_slack(ch, theta) / (1.0 - theta);
    match pt_ceiling(p, ch, theta) {
        Ok(c) => c.min(energy_limit),
        Err(_) => energy_limit,
    }
}

/// Optimal (τ, λ, P_t) for a fixed time ratio, plus the bisection step count.
pub fn solve_fixed_theta(
    p: &SystemParams,
    ch: &ChannelState,
    theta: f64,
    cfg: &SolverConfig,
) -> Result<(Allocation, u32)> {
    let theta0 = match check_feasibility(p, ch) {
        Feasibility::Feasible { theta0 } => theta0,
        Feasibility::Infeasible(reason) => return domain(format!("infeasible channel: {reason}")),
    };
    if !(theta > theta0 && theta < 1.0) {
        return domain(format!("theta = {theta} outside the feasible interval ({theta0}, 1)"));
    }
    let residual = |pt: f64| energy_balance_residual(p, ch, theta, pt);
    if !(residual(0.0) > 0.0) {
        return domain(format!("energy residual at pt = 0 is not positive for theta = {theta}"));
    }

    let top = bracket_top(p, ch, theta);
    let finish = |pt: f64| Allocation {
        tau: matched_rate(p, ch, theta, pt),
        lambda: matched_split_unchecked(p, ch, theta, pt).clamp(0.0, 1.0),
        pt,
        theta,
    };
    if residual(top) > 0.0 {
        // Root sits on the bracket end within rounding.
        return Ok((finish(top), 0));
    }

    let width_tol = cfg.tol_pt_rel * top;
    let (mut lo, mut hi) = (0.0, top);
    let mut iterations = 0u32;
    while hi - lo > width_tol {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok((finish(0.5 * (lo + hi)), iterations))
}

/// Grid search over θ with a bisection solve at each grid point.
pub fn solve(p: &SystemParams, ch: &ChannelState, cfg: &SolverConfig) -> SolveReport {
    let theta0 = match check_feasibility(p, ch) {
        Feasibility::Feasible { theta0 } => theta0,
        Feasibility::Infeasible(reason) => return SolveReport::infeasible(p, ch, reason),
    };

    let n = cfg.grid_levels;
    let mut best = Allocation::ZERO;
    let mut diagnostics = Vec::with_capacity(n);
    let mut total_iterations = 0u64;
    for i in 1..=n {
        let theta = grid_theta(theta0, i, n);
        let point = match solve_fixed_theta(p, ch, theta, cfg) {
            Ok((alloc, iterations)) => {
                if alloc.tau > best.tau {
                    best = alloc;
                }
                GridPoint {
                    theta,
                    pt: alloc.pt,
                    tau: alloc.tau,
                    iterations,
                }
            }
            // Only reachable when θ rounds onto θ₀ for very fine grids.
            Err(_) => GridPoint {
                theta,
                pt: 0.0,
                tau: 0.0,
                iterations: 0,
            },
        };
        total_iterations += u64::from(point.iterations);
        diagnostics.push(point);
    }

    SolveReport {
        status: Status::Feasible,
        infeasible_reason: None,
        best,
        theta0,
        lower_bound_tau: lower_bound_tau(p, ch),
        diagnostics,
        total_iterations,
        total_flops: FLOPS_PER_BISECTION_STEP * total_iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy_excess, rate_rd, rate_sr};

    fn defaults() -> (SystemParams, ChannelState) {
        (SystemParams::default(), ChannelState { g1: 0.3, g2: 0.1 })
    }

    #[test]
    fn gate_examples() {
        let p = SystemParams::default();
        assert_eq!(
            check_feasibility(&p, &ChannelState { g1: 0.02, g2: 0.1 }),
            Feasibility::Infeasible(InfeasibleReason::InsufficientHarvest)
        );
        assert_eq!(
            check_feasibility(&p, &ChannelState { g1: 5.0, g2: 0.0 }),
            Feasibility::Infeasible(InfeasibleReason::NoRelayLink)
        );
        match check_feasibility(&p, &ChannelState { g1: 0.1, g2: 0.1 }) {
            Feasibility::Feasible { theta0 } => assert!((theta0 - 0.25).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_theta_makes_constraints_tight() {
        let (p, ch) = defaults();
        let cfg = SolverConfig::default();
        let (a, iters) = solve_fixed_theta(&p, &ch, 0.5, &cfg).unwrap();
        assert!(iters <= cfg.max_bisection_steps());
        let r1 = rate_sr(&p, &ch, a.lambda, a.theta);
        let r2 = rate_rd(&p, &ch, a.pt, a.theta);
        assert!((r1 - a.tau).abs() <= 1e-9 * a.tau);
        assert!((r2 - a.tau).abs() <= 1e-12 * a.tau);
        assert!(energy_excess(&p, &ch, &a).abs() <= cfg.tol_constraint * p.full_harvest(&ch));
        assert!(a.lambda > 0.0 && a.lambda < 1.0 && a.pt > 0.0);
    }

    #[test]
    fn fixed_theta_rejects_outside_interval() {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.1, g2: 0.1 };
        let cfg = SolverConfig::default();
        assert!(solve_fixed_theta(&p, &ch, 0.25, &cfg).is_err());
        assert!(solve_fixed_theta(&p, &ch, 0.2, &cfg).is_err());
        assert!(solve_fixed_theta(&p, &ch, 1.0, &cfg).is_err());
        assert!(solve_fixed_theta(&p, &ch, 0.26, &cfg).is_ok());
        let dead = ChannelState { g1: 0.01, g2: 0.1 };
        assert!(solve_fixed_theta(&p, &dead, 0.5, &cfg).is_err());
    }

    #[test]
    fn near_one_theta_does_not_overflow() {
        let (p, ch) = defaults();
        let (a, _) = solve_fixed_theta(&p, &ch, 0.9995, &SolverConfig::default()).unwrap();
        assert!(a.pt.is_finite() && a.tau.is_finite() && a.tau > 0.0);
    }

    #[test]
    fn infeasible_report_is_zero_sentinel() {
        let p = SystemParams::default();
        let r = solve(&p, &ChannelState { g1: 0.01, g2: 0.1 }, &SolverConfig::default());
        assert_eq!(r.status, Status::Infeasible);
        assert_eq!(r.best, Allocation::ZERO);
        assert_eq!(r.total_flops, 0);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn single_level_grid_is_midpoint_solve() {
        let (p, ch) = defaults();
        let cfg = SolverConfig {
            grid_levels: 1,
            ..Default::default()
        };
        let r = solve(&p, &ch, &cfg);
        let theta = r.theta0 + (1.0 - r.theta0) / 2.0;
        let (a, iters) = solve_fixed_theta(&p, &ch, theta, &cfg).unwrap();
        assert_eq!(r.best, a);
        assert_eq!(r.total_iterations, u64::from(iters));
    }

    #[test]
    fn flops_follow_iteration_count() {
        let (p, ch) = defaults();
        let cfg = SolverConfig::default();
        let r = solve(&p, &ch, &cfg);
        let sum: u64 = r.diagnostics.iter().map(|g| u64::from(g.iterations)).sum();
        assert_eq!(r.total_iterations, sum);
        assert_eq!(r.total_flops, 3 * sum);
        assert_eq!(r.diagnostics.len(), 500);
        assert!(r.diagnostics.iter().all(|g| g.iterations <= cfg.max_bisection_steps()));
        assert_eq!(cfg.max_bisection_steps(), 40);
    }

    #[test]
    fn first_maximum_wins() {
        let (p, ch) = defaults();
        let r = solve(&p, &ch, &SolverConfig::default());
        let first_best = r
            .diagnostics
            .iter()
            .fold(None::<GridPoint>, |acc, g| match acc {
                Some(b) if g.tau <= b.tau => Some(b),
                _ => Some(*g),
            })
            .unwrap();
        assert_eq!(r.best.theta, first_best.theta);
        assert!(r.best.theta > r.theta0 && r.best.theta < 1.0);
        assert!(r.best.tau >= r.lower_bound_tau);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { grid_levels: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { tol_pt_rel: 1.0, ..Default::default() }.validate().is_err());
    }
}
