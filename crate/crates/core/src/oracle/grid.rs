//! Exhaustive grid maximiser that only evaluates the constraints.
//!
//! Never calls the rate-matching closed forms: for every (θ, λ, P_t) on the
//! grid the largest admissible τ is `min(rate_sr, rate_rd, energy cap)`,
//! where the energy cap is the τ that makes the energy constraint tight.

use rayon::prelude::*;

use crate::error::{config, domain, Result};
use crate::model::{rate_rd, rate_sr, theta0, Allocation, ChannelState, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_lambda: usize,
    pub n_pt: usize,
    /// Passes that shrink every window 10× around the incumbent.
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_theta: 200,
            n_lambda: 400,
            n_pt: 400,
            refine_rounds: 2,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 2 || self.n_lambda < 2 || self.n_pt < 2 {
            return config("grid resolutions must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub allocation: Allocation,
    /// Incumbent τ after the coarse pass and after each refinement round.
    pub round_taus: Vec<f64>,
}

/// Gate evaluated straight from the energy constraint at λ = τ = P_t = 0.
fn feasible_theta_range(p: &SystemParams, ch: &ChannelState) -> Option<f64> {
    if p.eta * p.q * ch.g1 <= p.pd || ch.g2 <= 0.0 {
        return None;
    }
    theta0(p, ch).ok()
}

/// Largest P_t the static energy budget can pay for at this θ.
fn pt_span(p: &SystemParams, ch: &ChannelState, theta: f64) -> f64 {
    let slack = p.static_slack(ch, theta) / (1.0 - theta);
    // Past the point where S-R at λ = 1 can carry the R-D rate, more power is wasted.
    let sr_max = rate_sr(p, ch, 1.0, theta);
    let a = ch.g2 / (2.0 * p.sigma2);
    let exponent = sr_max * p.t0 / (1.0 - theta) * std::f64::consts::LN_2;
    let matched = if exponent < 700.0 { exponent.exp_m1() / a } else { f64::INFINITY };
    slack.min(matched).max(0.0)
}

#[derive(Clone, Copy)]
struct Candidate {
    tau: f64,
    theta: f64,
    lambda: f64,
    u: f64,
    pt: f64,
}

impl Candidate {
    const NONE: Candidate = Candidate {
        tau: -1.0,
        theta: 0.0,
        lambda: 0.0,
        u: 0.0,
        pt: 0.0,
    };
}

fn linspace(center: f64, width: f64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let start = center - width / 2.0;
    (0..n)
        .map(|i| (start + width * i as f64 / (n - 1) as f64).clamp(lo, hi))
        .collect()
}

/// Best point of a (λ, u) grid at fixed θ, with P_t = u·pt_span(θ).
fn best_at_theta(p: &SystemParams, ch: &ChannelState, theta: f64, lambdas: &[f64], us: &[f64]) -> Candidate {
    let span = pt_span(p, ch, theta);
    let static_cost = p.pd * theta + p.pe * (1.0 - theta);
    let harvest = p.full_harvest(ch) * theta;
    let eps = p.eps_sum();
    let pts: Vec<f64> = us.iter().map(|u| u * span).collect();
    let r2: Vec<f64> = pts.iter().map(|&pt| rate_rd(p, ch, pt, theta)).collect();

    let mut best = Candidate::NONE;
    for &lambda in lambdas {
        let r1 = rate_sr(p, ch, lambda, theta);
        let budget = harvest * (1.0 - lambda) - static_cost;
        for (k, &pt) in pts.iter().enumerate() {
            let spare = budget - pt * (1.0 - theta);
            if spare < 0.0 {
                continue;
            }
            let cap = if eps > 0.0 { spare / eps } else { f64::INFINITY };
            let tau = r1.min(r2[k]).min(cap);
            if tau > best.tau {
                best = Candidate {
                    tau,
                    theta,
                    lambda,
                    u: us[k],
                    pt,
                };
            }
        }
    }
    best
}

fn best_over_thetas(p: &SystemParams, ch: &ChannelState, thetas: &[f64], lambdas: &[f64], us: &[f64]) -> Candidate {
    let per_theta: Vec<Candidate> = thetas
        .par_iter()
        .map(|&theta| best_at_theta(p, ch, theta, lambdas, us))
        .collect();
    // Index-ordered reduction keeps the first maximum.
    per_theta
        .into_iter()
        .fold(Candidate::NONE, |acc, c| if c.tau > acc.tau { c } else { acc })
}

fn to_allocation(c: &Candidate) -> Allocation {
    Allocation {
        tau: c.tau.max(0.0),
        lambda: c.lambda,
        pt: c.pt,
        theta: c.theta,
    }
}

/// Brute-force maximiser of the full problem. `None` when the channel is
/// infeasible.
pub fn brute_force_solve(p: &SystemParams, ch: &ChannelState, grid: &GridSpec) -> Result<Option<OracleSolution>> {
    grid.validate()?;
    let Some(theta0) = feasible_theta_range(p, ch) else {
        return Ok(None);
    };

    let mut width = [1.0 - theta0, 1.0, 1.0];
    let thetas: Vec<f64> = (1..=grid.n_theta)
        .map(|i| theta0 + i as f64 * (1.0 - theta0) / (grid.n_theta as f64 + 1.0))
        .collect();
    let lambdas = linspace(0.5, 1.0, grid.n_lambda, 0.0, 1.0);
    let us = linspace(0.5, 1.0, grid.n_pt, 0.0, 1.0);
    let mut best = best_over_thetas(p, ch, &thetas, &lambdas, &us);
    let mut round_taus = vec![best.tau.max(0.0)];

    for _ in 0..grid.refine_rounds {
        for w in width.iter_mut() {
            *w /= 10.0;
        }
        let thetas: Vec<f64> = linspace(best.theta, width[0], grid.n_theta, f64::NEG_INFINITY, f64::INFINITY)
            .into_iter()
            .filter(|&t| t > theta0 && t < 1.0)
            .collect();
        let lambdas = linspace(best.lambda, width[1], grid.n_lambda, 0.0, 1.0);
        let us = linspace(best.u, width[2], grid.n_pt, 0.0, 1.0);
        let round = best_over_thetas(p, ch, &thetas, &lambdas, &us);
        if round.tau > best.tau {
            best = round;
        }
        round_taus.push(best.tau.max(0.0));
    }

    Ok(Some(OracleSolution {
        allocation: to_allocation(&best),
        round_taus,
    }))
}

/// Brute-force maximiser with θ pinned; uses the λ and P_t resolutions and
/// refinement rounds of `grid`.
pub fn brute_force_fixed_theta(p: &SystemParams, ch: &ChannelState, theta: f64, grid: &GridSpec) -> Result<Allocation> {
    grid.validate()?;
    let Some(theta0) = feasible_theta_range(p, ch) else {
        return domain("infeasible channel");
    };
    if !(theta > theta0 && theta < 1.0) {
        return domain(format!("theta = {theta} outside ({theta0}, 1)"));
    }
    let mut width = [1.0, 1.0];
    let mut best = best_at_theta(
        p,
        ch,
        theta,
        &linspace(0.5, 1.0, grid.n_lambda, 0.0, 1.0),
        &linspace(0.5, 1.0, grid.n_pt, 0.0, 1.0),
    );
    for _ in 0..grid.refine_rounds {
        for w in width.iter_mut() {
            *w /= 10.0;
        }
        let lambdas = linspace(best.lambda, width[0], grid.n_lambda, 0.0, 1.0);
        let us = linspace(best.u, width[1], grid.n_pt, 0.0, 1.0);
        let round = best_at_theta(p, ch, theta, &lambdas, &us);
        if round.tau > best.tau {
            best = round;
        }
    }
    Ok(to_allocation(&best))
}

/// Same as [`brute_force_fixed_theta`] with an explicit λ grid, used to probe
/// degenerate restrictions such as λ ∈ {0}.
pub fn brute_force_with_lambdas(
    p: &SystemParams,
    ch: &ChannelState,
    theta: f64,
    lambdas: &[f64],
    n_pt: usize,
) -> Result<Allocation> {
    if feasible_theta_range(p, ch).is_none() {
        return domain("infeasible channel");
    }
    let best = best_at_theta(p, ch, theta, lambdas, &linspace(0.5, 1.0, n_pt.max(2), 0.0, 1.0));
    Ok(to_allocation(&best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, solve_fixed_theta, SolverConfig};

    fn defaults() -> (SystemParams, ChannelState) {
        (SystemParams::default(), ChannelState { g1: 0.3, g2: 0.1 })
    }

    #[test]
    fn infeasible_gate() {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.02, g2: 0.1 };
        assert!(brute_force_solve(&p, &ch, &GridSpec::default()).unwrap().is_none());
        let ch = ChannelState { g1: 0.3, g2: 0.0 };
        assert!(brute_force_solve(&p, &ch, &GridSpec::default()).unwrap().is_none());
    }

    #[test]
    fn fixed_theta_matches_bisection() {
        let (p, ch) = defaults();
        let grid = GridSpec::default();
        let oracle = brute_force_fixed_theta(&p, &ch, 0.5, &grid).unwrap();
        let (a, _) = solve_fixed_theta(&p, &ch, 0.5, &SolverConfig::default()).unwrap();
        assert!(oracle.tau <= a.tau * (1.0 + 1e-9));
        assert!((oracle.tau - a.tau).abs() <= 1e-3 * a.tau, "{} vs {}", oracle.tau, a.tau);
        assert!((oracle.pt - a.pt).abs() <= 1e-2 * a.pt);
        assert!((oracle.lambda - a.lambda).abs() <= 1e-2 * a.lambda);
    }

    #[test]
    fn refinement_never_loses_ground() {
        let (p, ch) = defaults();
        let grid = GridSpec {
            n_theta: 40,
            n_lambda: 60,
            n_pt: 60,
            refine_rounds: 3,
        };
        let sol = brute_force_solve(&p, &ch, &grid).unwrap().unwrap();
        assert_eq!(sol.round_taus.len(), 4);
        assert!(sol.round_taus.windows(2).all(|w| w[1] >= w[0]));
        let reference = solve(&p, &ch, &SolverConfig::default()).best.tau;
        assert!((sol.allocation.tau - reference).abs() < 1e-2 * reference);
    }

    #[test]
    fn zero_split_carries_nothing() {
        let (p, ch) = defaults();
        let a = brute_force_with_lambdas(&p, &ch, 0.5, &[0.0], 100).unwrap();
        assert_eq!(a.tau, 0.0);
    }

    #[test]
    fn rate_vanishes_near_theta0() {
        let (p, ch) = defaults();
        let t0 = theta0(&p, &ch).unwrap();
        let grid = GridSpec {
            n_theta: 2,
            n_lambda: 100,
            n_pt: 100,
            refine_rounds: 1,
        };
        let near = brute_force_fixed_theta(&p, &ch, t0 + 1e-6, &grid).unwrap();
        let far = brute_force_fixed_theta(&p, &ch, 0.5, &grid).unwrap();
        assert!(near.tau < 1e-3 * far.tau);
    }

    #[test]
    fn rejects_bad_grid() {
        let (p, ch) = defaults();
        let grid = GridSpec { n_pt: 1, ..Default::default() };
        assert!(brute_force_solve(&p, &ch, &grid).is_err());
    }
}
