//! Rician block fading and Monte Carlo throughput campaigns.
//!
//! Trial `i` draws its channel from a ChaCha20 generator seeded with the
//! campaign seed and switched to stream `i`, so every draw depends only on
//! `(seed, i)`. Trials run in parallel and are reduced in index order, which
//! makes the output independent of the thread count.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{config, Result, SwiptError};
use crate::model::{Allocation, ChannelState, SystemParams};
use crate::solver::{
    check_feasibility, solve, solve_fixed_theta, Feasibility, GridPoint, InfeasibleReason, SolveReport, SolverConfig,
    Status, FLOPS_PER_BISECTION_STEP,
};

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = trial index";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec {
    /// Rice factor; `f64::INFINITY` gives a pure line-of-sight channel.
    pub k: f64,
    /// Mean S-R power gain.
    pub omega1: f64,
    /// Mean R-D power gain.
    pub omega2: f64,
}

impl Default for FadingSpec {
    fn default() -> Self {
        FadingSpec {
            k: 1.0,
            omega1: 0.4,
            omega2: 0.4,
        }
    }
}

impl FadingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) {
            return config(format!("Rice factor must be nonnegative, got {}", self.k));
        }
        if !(self.omega1 > 0.0 && self.omega1.is_finite() && self.omega2 > 0.0 && self.omega2.is_finite()) {
            return config("mean channel gains must be positive and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Grid search over θ.
    Dynamic,
    /// θ fixed at 1/2.
    ConventionalHalf,
    /// Grid search with all circuit power parameters zeroed.
    NoCpc,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Dynamic, Policy::ConventionalHalf, Policy::NoCpc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Dynamic => "dynamic",
            Policy::ConventionalHalf => "conventional-half",
            Policy::NoCpc => "no-cpc",
        }
    }
}

impl FromStr for Policy {
    type Err = SwiptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(Policy::Dynamic),
            "conventional-half" | "half" => Ok(Policy::ConventionalHalf),
            "no-cpc" | "nocpc" => Ok(Policy::NoCpc),
            other => config(format!("unknown policy '{other}' (dynamic, conventional-half, no-cpc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub policy: Policy,
    pub solver: SolverConfig,
}

/// One draw of |h|² with h = √(ΩK/(K+1)) + z, z ~ CN(0, Ω/(K+1)).
pub fn sample_rician_gain<R: Rng + ?Sized>(k: f64, omega: f64, rng: &mut R) -> f64 {
    if k.is_infinite() {
        return omega;
    }
    let los = (omega * k / (k + 1.0)).sqrt();
    let sd = (omega / (2.0 * (k + 1.0))).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let x = los + sd * re;
    let y = sd * im;
    x * x + y * y
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Channel of trial `trial`: g₁ is drawn first, then g₂.
pub fn channel_for_trial(fading: &FadingSpec, seed: u64, trial: u64) -> ChannelState {
    let mut rng = trial_rng(seed, trial);
    let g1 = sample_rician_gain(fading.k, fading.omega1, &mut rng);
    let g2 = sample_rician_gain(fading.k, fading.omega2, &mut rng);
    ChannelState { g1, g2 }
}

pub fn solve_policy(p: &SystemParams, ch: &ChannelState, policy: Policy, cfg: &SolverConfig) -> SolveReport {
    match policy {
        Policy::Dynamic => solve(p, ch, cfg),
        Policy::NoCpc => solve(&p.without_circuit_power(), ch, cfg),
        Policy::ConventionalHalf => {
            let reason = match check_feasibility(p, ch) {
                Feasibility::Infeasible(reason) => reason,
                Feasibility::Feasible { theta0 } if theta0 < 0.5 => {
                    if let Ok((best, iterations)) = solve_fixed_theta(p, ch, 0.5, cfg) {
                        let mut report = SolveReport::infeasible(p, ch, InfeasibleReason::HalfThetaExcluded);
                        report.status = Status::Feasible;
                        report.infeasible_reason = None;
                        report.best = best;
                        report.diagnostics = vec![GridPoint {
                            theta: 0.5,
                            pt: best.pt,
                            tau: best.tau,
                            iterations,
                        }];
                        report.total_iterations = u64::from(iterations);
                        report.total_flops = FLOPS_PER_BISECTION_STEP * u64::from(iterations);
                        return report;
                    }
                    InfeasibleReason::HalfThetaExcluded
                }
                Feasibility::Feasible { .. } => InfeasibleReason::HalfThetaExcluded,
            };
            SolveReport::infeasible(p, ch, reason)
        }
    }
}

/// Per-trial result without the grid diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub channel: ChannelState,
    pub status: Status,
    pub best: Allocation,
    pub theta0: f64,
    pub lower_bound_tau: f64,
    pub iterations: u64,
}

impl TrialOutcome {
    pub fn from_report(channel: ChannelState, r: &SolveReport) -> Self {
        TrialOutcome {
            channel,
            status: r.status,
            best: r.best,
            theta0: r.theta0,
            lower_bound_tau: r.lower_bound_tau,
            iterations: r.total_iterations,
        }
    }
}

pub fn trial_outcomes(p: &SystemParams, fading: &FadingSpec, mc: &McConfig) -> Result<Vec<TrialOutcome>> {
    if mc.trials == 0 {
        return config("trials must be at least 1");
    }
    p.validate()?;
    fading.validate()?;
    mc.solver.validate()?;
    Ok((0..mc.trials as u64)
        .into_par_iter()
        .map(|i| {
            let ch = channel_for_trial(fading, mc.seed, i);
            TrialOutcome::from_report(ch, &solve_policy(p, &ch, mc.policy, &mc.solver))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub trials: usize,
    /// Mean τ*, infeasible draws counting as 0.
    pub mean: f64,
    /// Standard error of the mean; 0 for a single trial.
    pub std_error: f64,
    pub infeasible_fraction: f64,
    pub mean_lambda: f64,
    pub mean_pt: f64,
    pub mean_theta: f64,
    /// Mean θ₀ over the draws where it is defined; NaN if there are none.
    pub mean_theta0: f64,
    pub mean_lower_bound: f64,
    pub total_iterations: u64,
    pub total_flops: u64,
}

impl McSummary {
    /// Index-ordered reduction over trial outcomes.
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let n = outcomes.len() as f64;
        let mean_of = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        let mean = mean_of(&|o| o.best.tau);
        let std_error = if outcomes.len() > 1 {
            let var = outcomes.iter().map(|o| (o.best.tau - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let infeasible = outcomes.iter().filter(|o| o.status == Status::Infeasible).count();
        let total_iterations: u64 = outcomes.iter().map(|o| o.iterations).sum();
        let (theta0_sum, theta0_count) = outcomes
            .iter()
            .filter(|o| o.theta0.is_finite())
            .fold((0.0, 0usize), |(s, c), o| (s + o.theta0, c + 1));
        McSummary {
            trials: outcomes.len(),
            mean,
            std_error,
            infeasible_fraction: infeasible as f64 / n,
            mean_lambda: mean_of(&|o| o.best.lambda),
            mean_pt: mean_of(&|o| o.best.pt),
            mean_theta: mean_of(&|o| o.best.theta),
            mean_theta0: if theta0_count > 0 { theta0_sum / theta0_count as f64 } else { f64::NAN },
            mean_lower_bound: mean_of(&|o| o.lower_bound_tau),
            total_iterations,
            total_flops: FLOPS_PER_BISECTION_STEP * total_iterations,
        }
    }

    /// Half-width of the normal 95% confidence interval.
    pub fn ci95(&self) -> f64 {
        1.959963984540054 * self.std_error
    }
}

pub fn average_throughput(p: &SystemParams, fading: &FadingSpec, mc: &McConfig) -> Result<McSummary> {
    Ok(McSummary::from_outcomes(&trial_outcomes(p, fading, mc)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    G1,
    G2,
    Q,
    /// ε_d + ε_e, split evenly between decoder and encoder.
    EpsSum,
    /// P_d = P_e.
    PdPe,
    RiceK,
    Omega1,
    Omega2,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::G1 => "g1",
            SweepAxis::G2 => "g2",
            SweepAxis::Q => "q",
            SweepAxis::EpsSum => "eps_sum",
            SweepAxis::PdPe => "pd_pe",
            SweepAxis::RiceK => "k",
            SweepAxis::Omega1 => "omega1",
            SweepAxis::Omega2 => "omega2",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = SwiptError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "g1" => SweepAxis::G1,
            "g2" => SweepAxis::G2,
            "q" => SweepAxis::Q,
            "eps_sum" | "eps-sum" => SweepAxis::EpsSum,
            "pd_pe" | "pd-pe" => SweepAxis::PdPe,
            "k" => SweepAxis::RiceK,
            "omega1" => SweepAxis::Omega1,
            "omega2" => SweepAxis::Omega2,
            other => return config(format!("unknown sweep axis '{other}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    Fixed(ChannelState),
    Fading { fading: FadingSpec, trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Single(TrialOutcome, u64),
    Average(McSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub policy: Policy,
    /// Channel gains, or the mean gains Ω₁, Ω₂ for fading rows.
    pub g1: f64,
    pub g2: f64,
    pub outcome: SweepOutcome,
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return config("sweep needs at least one value");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return config("sweep values must be finite");
    }
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    if !(up || down) {
        return config("sweep values must be monotone");
    }
    Ok(())
}

/// One row per axis value per policy. Fading rows share the seed across
/// values and policies, so every row sees the same channel draws.
pub fn sweep(
    p: &SystemParams,
    scenario: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    policies: &[Policy],
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    check_values(values)?;
    if policies.is_empty() {
        return config("sweep needs at least one policy");
    }
    match (axis, scenario) {
        (SweepAxis::G1 | SweepAxis::G2, Scenario::Fading { .. }) => {
            return config("g1/g2 axes need a fixed channel; sweep omega1/omega2 for fading")
        }
        (SweepAxis::RiceK | SweepAxis::Omega1 | SweepAxis::Omega2, Scenario::Fixed(_)) => {
            return config("k/omega axes need a fading scenario")
        }
        _ => {}
    }

    let mut rows = Vec::with_capacity(values.len() * policies.len());
    for &value in values {
        let mut params = *p;
        let mut scenario = *scenario;
        match axis {
            SweepAxis::Q => params.q = value,
            SweepAxis::EpsSum => {
                params.eps_d = value / 2.0;
                params.eps_e = value / 2.0;
            }
            SweepAxis::PdPe => {
                params.pd = value;
                params.pe = value;
            }
            _ => {}
        }
        match (&mut scenario, axis) {
            (Scenario::Fixed(ch), SweepAxis::G1) => ch.g1 = value,
            (Scenario::Fixed(ch), SweepAxis::G2) => ch.g2 = value,
            (Scenario::Fading { fading, .. }, SweepAxis::RiceK) => fading.k = value,
            (Scenario::Fading { fading, .. }, SweepAxis::Omega1) => fading.omega1 = value,
            (Scenario::Fading { fading, .. }, SweepAxis::Omega2) => fading.omega2 = value,
            _ => {}
        }
        params.validate()?;

        for &policy in policies {
            let row = match scenario {
                Scenario::Fixed(ch) => {
                    ch.validate()?;
                    let report = solve_policy(&params, &ch, policy, cfg);
                    SweepRow {
                        axis_value: value,
                        policy,
                        g1: ch.g1,
                        g2: ch.g2,
                        outcome: SweepOutcome::Single(TrialOutcome::from_report(ch, &report), report.total_flops),
                    }
                }
                Scenario::Fading { fading, trials, seed } => {
                    let mc = McConfig {
                        trials,
                        seed,
                        policy,
                        solver: *cfg,
                    };
                    SweepRow {
                        axis_value: value,
                        policy,
                        g1: fading.omega1,
                        g2: fading.omega2,
                        outcome: SweepOutcome::Average(average_throughput(&params, &fading, &mc)?),
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_limit_is_exponential() {
        // For an exponential law P(g > Ω) = e⁻¹.
        let omega = 0.7;
        let n = 40_000;
        let above = (0..n)
            .filter(|&i| channel_for_trial(&FadingSpec { k: 0.0, omega1: omega, omega2: omega }, 9, i).g1 > omega)
            .count();
        let frac = above as f64 / n as f64;
        let se = ((-1.0f64).exp() * (1.0 - (-1.0f64).exp()) / n as f64).sqrt();
        assert!((frac - (-1.0f64).exp()).abs() < 4.0 * se, "{frac}");
    }

    #[test]
    fn line_of_sight_limit() {
        let mut rng = trial_rng(1, 0);
        assert_eq!(sample_rician_gain(f64::INFINITY, 0.4, &mut rng), 0.4);
        let draws: Vec<f64> = (0..2000).map(|_| sample_rician_gain(1e8, 0.4, &mut rng)).collect();
        assert!(draws.iter().all(|g| (g - 0.4).abs() < 1e-2));
    }

    #[test]
    fn sample_mean_matches_omega() {
        // Var[g] = Ω²(2K+1)/(K+1)².
        for k in [0.0, 1.0, 3.0] {
            let omega = 0.4;
            let n = 100_000u64;
            let mut rng = trial_rng(42, 7);
            let mean = (0..n).map(|_| sample_rician_gain(k, omega, &mut rng)).sum::<f64>() / n as f64;
            let sd = omega * (2.0 * k + 1.0).sqrt() / (k + 1.0);
            assert!((mean - omega).abs() < 3.0 * sd / (n as f64).sqrt(), "K={k}: {mean}");
        }
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let f = FadingSpec::default();
        let a: Vec<_> = (0..50).map(|i| channel_for_trial(&f, 3, i)).collect();
        let b: Vec<_> = (0..50).rev().map(|i| channel_for_trial(&f, 3, i)).collect();
        assert!(a.iter().zip(b.iter().rev()).all(|(x, y)| x == y));
        assert_ne!(channel_for_trial(&f, 3, 0), channel_for_trial(&f, 4, 0));
    }

    #[test]
    fn policies_order_on_a_fixed_channel() {
        let p = SystemParams::default();
        let ch = ChannelState { g1: 0.3, g2: 0.1 };
        let cfg = SolverConfig::default();
        let dynamic = solve_policy(&p, &ch, Policy::Dynamic, &cfg).best.tau;
        let half = solve_policy(&p, &ch, Policy::ConventionalHalf, &cfg).best.tau;
        let free = solve_policy(&p, &ch, Policy::NoCpc, &cfg).best.tau;
        assert!(free >= dynamic && dynamic >= half * (1.0 - 1e-6));
        let weak = ChannelState { g1: 0.026, g2: 0.3 };
        let r = solve_policy(&p, &weak, Policy::ConventionalHalf, &cfg);
        assert_eq!(r.status, Status::Infeasible);
        assert_eq!(solve_policy(&p, &weak, Policy::NoCpc, &cfg).status, Status::Feasible);
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let mc = McConfig {
            trials: 0,
            seed: 1,
            policy: Policy::Dynamic,
            solver: SolverConfig::default(),
        };
        let err = average_throughput(&SystemParams::default(), &FadingSpec::default(), &mc).unwrap_err();
        assert!(matches!(err, SwiptError::Config(_)));
    }

    #[test]
    fn single_trial_summary() {
        let p = SystemParams::default();
        let f = FadingSpec::default();
        let mc = McConfig {
            trials: 1,
            seed: 5,
            policy: Policy::Dynamic,
            solver: SolverConfig { grid_levels: 50, ..Default::default() },
        };
        let s = average_throughput(&p, &f, &mc).unwrap();
        let ch = channel_for_trial(&f, 5, 0);
        assert_eq!(s.mean, solve(&p, &ch, &mc.solver).best.tau);
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn repeated_campaigns_are_identical() {
        let p = SystemParams::default();
        let f = FadingSpec { k: 2.0, ..Default::default() };
        let mc = McConfig {
            trials: 64,
            seed: 11,
            policy: Policy::Dynamic,
            solver: SolverConfig { grid_levels: 40, ..Default::default() },
        };
        let a = average_throughput(&p, &f, &mc).unwrap();
        let b = average_throughput(&p, &f, &mc).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let p = SystemParams::default();
        let cfg = SolverConfig::default();
        let fixed = Scenario::Fixed(ChannelState { g1: 0.3, g2: 0.1 });
        assert!(sweep(&p, &fixed, SweepAxis::Q, &[], &[Policy::Dynamic], &cfg).is_err());
        assert!(sweep(&p, &fixed, SweepAxis::Q, &[1.0, 3.0, 2.0], &[Policy::Dynamic], &cfg).is_err());
        assert!(sweep(&p, &fixed, SweepAxis::RiceK, &[1.0], &[Policy::Dynamic], &cfg).is_err());
        assert!("bandwidth".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn single_value_sweep_is_one_solve() {
        let p = SystemParams::default();
        let cfg = SolverConfig::default();
        let ch = ChannelState { g1: 0.3, g2: 0.1 };
        let rows = sweep(&p, &Scenario::Fixed(ch), SweepAxis::G1, &[0.3], &[Policy::Dynamic], &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        match &rows[0].outcome {
            SweepOutcome::Single(o, flops) => {
                let direct = solve(&p, &ch, &cfg);
                assert_eq!(o.best, direct.best);
                assert_eq!(*flops, direct.total_flops);
            }
            other => panic!("{other:?}"),
        }
    }
}
