//! Numerical check of the first-order optimality conditions at fixed θ.
//!
//! Only the interior branch (λ > 0, P_t > 0) is handled, where the bound
//! multipliers a₃, a₄, a₅ vanish. Stationarity in (τ, λ, P_t) then fixes the
//! remaining multipliers in closed form:
//!
//! ```text
//! a₁ = a₆ ηQg₁θ / R₁'(λ)      a₂ = a₆ (1−θ) / R₂'(P_t)
//! a₆ = 1 / (ηQg₁θ / R₁' + (1−θ) / R₂' + ε_d + ε_e)
//! ```
//!
//! where R₁, R₂ are the hop rates. Residuals are scaled so that every entry
//! is dimensionless.

use std::f64::consts::LN_2;

use super::{check_feasibility, Feasibility};
use crate::error::{domain, Result};
use crate::model::{energy_excess, rate_rd, rate_sr, Allocation, ChannelState, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktTolerance {
    /// Bound on every scaled stationarity, slackness and primal residual.
    pub residual: f64,
    /// Duals may dip this far below zero.
    pub dual: f64,
}

impl Default for KktTolerance {
    fn default() -> Self {
        KktTolerance {
            residual: 1e-6,
            dual: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Multipliers a₁..a₆. a₁, a₂ are dimensionless; a₆ is in bits/s per mW.
    pub duals: [f64; 6],
    /// ∂D/∂τ, ∂D/∂λ, ∂D/∂P_t, each divided by the sum of its term magnitudes.
    pub stationarity_residuals: [f64; 3],
    /// a₁C₁, a₂C₂, a₆·(energy excess), a₃λ, a₄P_t, a₅τ, in units of the rate scale.
    pub complementary_slackness_residuals: [f64; 6],
    /// Positive parts of C₁, C₂ (rate scaled) and of the energy excess
    /// (scaled by ηQg₁θ).
    pub primal_violations: [f64; 3],
    pub passed: bool,
}

impl KktReport {
    pub fn max_stationarity(&self) -> f64 {
        max_abs(&self.stationarity_residuals)
    }

    pub fn max_complementary_slackness(&self) -> f64 {
        max_abs(&self.complementary_slackness_residuals)
    }

    pub fn max_primal_violation(&self) -> f64 {
        max_abs(&self.primal_violations)
    }

    pub fn min_dual(&self) -> f64 {
        self.duals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn verify_kkt(
    p: &SystemParams,
    ch: &ChannelState,
    alloc: &Allocation,
    tol: &KktTolerance,
) -> Result<KktReport> {
    let theta0 = match check_feasibility(p, ch) {
        Feasibility::Feasible { theta0 } => theta0,
        Feasibility::Infeasible(reason) => return domain(format!("infeasible channel: {reason}")),
    };
    let Allocation { tau, lambda, pt, theta } = *alloc;
    if !(lambda > 0.0 && lambda < 1.0) || !(pt > 0.0) {
        return domain("KKT check covers interior allocations only (0 < lambda < 1, pt > 0)");
    }
    if !(theta > theta0 && theta < 1.0) {
        return domain(format!("theta = {theta} outside ({theta0}, 1)"));
    }

    let harvest = p.full_harvest(ch) * theta;
    let eps = p.eps_sum();

    // Rate slopes.
    let s = p.q * ch.g1 / p.sigma2;
    let d_r1 = theta / (p.t0 * LN_2) * s / ((1.0 + lambda) * (1.0 + lambda + s * lambda));
    let a = ch.g2 / (2.0 * p.sigma2);
    let d_r2 = (1.0 - theta) / (p.t0 * LN_2) * a / (1.0 + a * pt);

    let a6 = 1.0 / (harvest / d_r1 + (1.0 - theta) / d_r2 + eps);
    let a1 = a6 * harvest / d_r1;
    let a2 = a6 * (1.0 - theta) / d_r2;
    let (a3, a4, a5) = (0.0, 0.0, 0.0);

    let relative = |terms: &[f64]| {
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        let total: f64 = terms.iter().sum();
        if scale > 0.0 {
            total / scale
        } else {
            0.0
        }
    };
    let stationarity = [
        relative(&[1.0, -a1, -a2, a5, -a6 * eps]),
        relative(&[a1 * d_r1, a3, -a6 * harvest]),
        relative(&[a2 * d_r2, a4, -a6 * (1.0 - theta)]),
    ];

    let r1 = rate_sr(p, ch, lambda, theta);
    let r2 = rate_rd(p, ch, pt, theta);
    let rate_scale = tau.max(r1).max(r2);
    let c1 = tau - r1;
    let c2 = tau - r2;
    let excess = energy_excess(p, ch, alloc);

    let slackness = [
        a1 * c1 / rate_scale,
        a2 * c2 / rate_scale,
        a6 * excess / rate_scale,
        a3 * lambda,
        a4 * pt,
        a5 * tau,
    ];
    let primal = [
        (c1 / rate_scale).max(0.0),
        (c2 / rate_scale).max(0.0),
        (excess / harvest).max(0.0),
    ];
    let duals = [a1, a2, a3, a4, a5, a6];

    let within = |v: &[f64]| v.iter().all(|x| x.abs() <= tol.residual);
    let passed = tau >= 0.0
        && within(&stationarity)
        && within(&slackness)
        && within(&primal)
        && duals.iter().all(|&d| d >= -tol.dual);

    Ok(KktReport {
        duals,
        stationarity_residuals: stationarity,
        complementary_slackness_residuals: slackness,
        primal_violations: primal,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{matched_rate, matched_split};
    use crate::solver::{solve_fixed_theta, SolverConfig};

    fn solved() -> (SystemParams, ChannelState, Allocation) {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.3, g2: 0.1 };
        let (a, _) = solve_fixed_theta(&p, &ch, 0.6, &SolverConfig::default()).unwrap();
        (p, ch, a)
    }

    #[test]
    fn solved_point_passes() {
        let (p, ch, a) = solved();
        let r = verify_kkt(&p, &ch, &a, &KktTolerance::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.min_dual() >= 0.0);
        assert!(r.duals[0] > 0.0 && r.duals[1] > 0.0 && r.duals[5] > 0.0);
    }

    #[test]
    fn raised_power_fails() {
        let (p, ch, a) = solved();
        let pt = a.pt * 1.1;
        let moved = Allocation {
            pt,
            lambda: matched_split(&p, &ch, a.theta, pt).unwrap(),
            tau: matched_rate(&p, &ch, a.theta, pt),
            theta: a.theta,
        };
        let r = verify_kkt(&p, &ch, &moved, &KktTolerance::default()).unwrap();
        assert!(!r.passed);
        assert!(r.primal_violations[2] > 1e-3);
    }

    #[test]
    fn halved_rate_fails() {
        let (p, ch, a) = solved();
        let slow = Allocation { tau: a.tau * 0.5, ..a };
        let r = verify_kkt(&p, &ch, &slow, &KktTolerance::default()).unwrap();
        assert!(!r.passed);
        assert!(r.complementary_slackness_residuals[0].abs() > 1e-3);
    }

    #[test]
    fn boundary_allocations_are_rejected() {
        let (p, ch, a) = solved();
        let tol = KktTolerance::default();
        assert!(verify_kkt(&p, &ch, &Allocation { lambda: 0.0, ..a }, &tol).is_err());
        assert!(verify_kkt(&p, &ch, &Allocation { pt: 0.0, ..a }, &tol).is_err());
        assert!(verify_kkt(&p, &ch, &Allocation { theta: 0.01, ..a }, &tol).is_err());
    }
}
