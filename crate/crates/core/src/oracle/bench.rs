//! FLOP comparison between the bisection grid search and the interior-point
//! reference run on the same θ grid.

use rayon::prelude::*;

use super::interior_point::interior_point_fixed_theta;
use crate::error::Result;
use crate::model::{ChannelState, SystemParams};
use crate::solver::{grid_theta, solve, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopComparison {
    pub bisection_iterations: u64,
    pub flops_bisection: u64,
    pub newton_iterations: u64,
    pub flops_ip: u64,
    /// τ* from the bisection grid search.
    pub tau_bisection: f64,
    /// Best τ over the interior-point solves.
    pub tau_ip: f64,
}

impl FlopComparison {
    pub fn ratio(&self) -> f64 {
        self.flops_ip as f64 / self.flops_bisection as f64
    }
}

/// Runs both methods over the `cfg.grid_levels` grid points. `None` when the
/// channel is infeasible.
pub fn compare_flops(
    p: &SystemParams,
    ch: &ChannelState,
    cfg: &SolverConfig,
    ip_tol: f64,
) -> Result<Option<FlopComparison>> {
    let report = solve(p, ch, cfg);
    if !report.is_feasible() {
        return Ok(None);
    }
    let n = cfg.grid_levels;
    let ip: Vec<_> = (1..=n)
        .into_par_iter()
        .map(|i| interior_point_fixed_theta(p, ch, grid_theta(report.theta0, i, n), ip_tol))
        .collect::<Result<_>>()?;
    let newton_iterations = ip.iter().map(|r| r.iterations).sum();
    Ok(Some(FlopComparison {
        bisection_iterations: report.total_iterations,
        flops_bisection: report.total_flops,
        newton_iterations,
        flops_ip: ip.iter().map(|r| r.flops).sum(),
        tau_bisection: report.best.tau,
        tau_ip: ip.iter().map(|r| r.tau).fold(0.0, f64::max),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FLOPS_PER_NEWTON_STEP;
    use crate::solver::FLOPS_PER_BISECTION_STEP;

    #[test]
    fn accounting_identities() {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.3, g2: 0.1 };
        let cfg = SolverConfig {
            grid_levels: 20,
            ..Default::default()
        };
        let c = compare_flops(&p, &ch, &cfg, 1e-8).unwrap().unwrap();
        assert_eq!(c.flops_bisection, FLOPS_PER_BISECTION_STEP * c.bisection_iterations);
        assert_eq!(c.flops_ip, FLOPS_PER_NEWTON_STEP * c.newton_iterations);
        assert!((c.tau_ip - c.tau_bisection).abs() < 1e-5 * c.tau_bisection);
        assert!(c.ratio() > 1.0);
    }

    #[test]
    fn infeasible_channel_has_no_comparison() {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.01, g2: 0.1 };
        assert!(compare_flops(&p, &ch, &SolverConfig::default(), 1e-6).unwrap().is_none());
    }
}
