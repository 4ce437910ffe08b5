//! Link model of the power-splitting decode-and-forward relay.
//!
//! Units throughout: powers in mW, time in seconds, rates in bits/s and the
//! dynamic circuit energies `eps_d`, `eps_e` in mW per bit/s. Every function
//! here is a pure closed-form evaluation.
//!
//! Exponentials of the form `(1 + x)^a` are evaluated as `exp(a * ln_1p(x))`
//! and differences `(1 + x)^a - 1` as `exp_m1(a * ln_1p(x))` so that small SNR
//! values keep their precision.

use std::f64::consts::LN_2;

use crate::error::{config, domain, Result};

/// Physical constants of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Source transmit power Q (mW).
    pub q: f64,
    /// Noise power σ² (mW).
    pub sigma2: f64,
    /// Sample period T₀ (s).
    pub t0: f64,
    /// Energy harvesting efficiency η.
    pub eta: f64,
    /// Decoder static power (mW).
    pub pd: f64,
    /// Encoder static power (mW).
    pub pe: f64,
    /// Decoder dynamic energy per unit rate (mW per bit/s).
    pub eps_d: f64,
    /// Encoder dynamic energy per unit rate (mW per bit/s).
    pub eps_e: f64,
}

impl Default for SystemParams {
    /// Q = 500 mW, σ² = 10 mW, T₀ = 500 µs, η = 0.8, P_d = P_e = 10 mW,
    /// ε_d = ε_e = 0.05 mW per bit/s.
    fn default() -> Self {
        SystemParams {
            q: 500.0,
            sigma2: 10.0,
            t0: 5e-4,
            eta: 0.8,
            pd: 10.0,
            pe: 10.0,
            eps_d: 0.05,
            eps_e: 0.05,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.q,
            self.sigma2,
            self.t0,
            self.eta,
            self.pd,
            self.pe,
            self.eps_d,
            self.eps_e,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return config("system parameters must be finite");
        }
        if !(self.q > 0.0 && self.sigma2 > 0.0 && self.t0 > 0.0) {
            return config("Q, sigma2 and T0 must be positive");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return config(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.pd < 0.0 || self.pe < 0.0 || self.eps_d < 0.0 || self.eps_e < 0.0 {
            return config("circuit power parameters must be nonnegative");
        }
        Ok(())
    }

    /// ε_d + ε_e, the only combination the energy constraint depends on.
    pub fn eps_sum(&self) -> f64 {
        self.eps_d + self.eps_e
    }

    /// Copy with all four circuit power parameters set to zero.
    pub fn without_circuit_power(&self) -> Self {
        SystemParams {
            pd: 0.0,
            pe: 0.0,
            eps_d: 0.0,
            eps_e: 0.0,
            ..*self
        }
    }

    /// ηQg₁: harvested power when the whole received signal goes to the harvester.
    pub fn full_harvest(&self, ch: &ChannelState) -> f64 {
        self.eta * self.q * ch.g1
    }

    /// ηQg₁θ − P_dθ − P_e(1−θ): energy budget left after static circuit power.
    pub fn static_slack(&self, ch: &ChannelState, theta: f64) -> f64 {
        self.full_harvest(ch) * theta - self.pd * theta - self.pe * (1.0 - theta)
    }
}

/// Channel power gains of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    /// Source to relay gain |h₁|².
    pub g1: f64,
    /// Relay to destination gain |h₂|².
    pub g2: f64,
}

impl ChannelState {
    pub fn new(g1: f64, g2: f64) -> Result<Self> {
        let ch = ChannelState { g1, g2 };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g1.is_finite() && self.g2.is_finite()) || self.g1 < 0.0 || self.g2 < 0.0 {
            return config(format!(
                "channel gains must be finite and nonnegative, got g1={} g2={}",
                self.g1, self.g2
            ));
        }
        Ok(())
    }
}

/// A decision point (τ, λ, P_t, θ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Allocation {
    /// Source information rate (bits/s).
    pub tau: f64,
    /// Power-splitting ratio sent to the information decoder.
    pub lambda: f64,
    /// Relay transmit power (mW).
    pub pt: f64,
    /// Fraction of the block used for the source to relay hop.
    pub theta: f64,
}

impl Allocation {
    /// All-zero allocation returned for infeasible channels.
    pub const ZERO: Allocation = Allocation {
        tau: 0.0,
        lambda: 0.0,
        pt: 0.0,
        theta: 0.0,
    };
}

/// Decoder and encoder power draw of the relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitPower {
    pub decoder: f64,
    pub encoder: f64,
}

pub fn snr_sr(p: &SystemParams, ch: &ChannelState, lambda: f64) -> f64 {
    p.q * ch.g1 * lambda / ((1.0 + lambda) * p.sigma2)
}

pub fn snr_rd(p: &SystemParams, ch: &ChannelState, pt: f64) -> f64 {
    pt * ch.g2 / (2.0 * p.sigma2)
}

/// Source to relay rate (θ/T₀)·log₂(1 + snr_sr).
pub fn rate_sr(p: &SystemParams, ch: &ChannelState, lambda: f64, theta: f64) -> f64 {
    theta / p.t0 * snr_sr(p, ch, lambda).ln_1p() / LN_2
}

/// Relay to destination rate ((1−θ)/T₀)·log₂(1 + snr_rd).
pub fn rate_rd(p: &SystemParams, ch: &ChannelState, pt: f64, theta: f64) -> f64 {
    (1.0 - theta) / p.t0 * snr_rd(p, ch, pt).ln_1p() / LN_2
}

/// Rate-dependent circuit power at the decoder and encoder.
pub fn circuit_powers(p: &SystemParams, tau: f64, theta: f64, pt: f64) -> CircuitPower {
    CircuitPower {
        decoder: p.pd + p.eps_d * tau / theta,
        encoder: pt + p.pe + p.eps_e * tau / (1.0 - theta),
    }
}

/// Left side minus right side of the per-block energy constraint, divided by
/// the block duration. Nonpositive means the allocation is energy feasible.
pub fn energy_excess(p: &SystemParams, ch: &ChannelState, alloc: &Allocation) -> f64 {
    let theta = alloc.theta;
    p.pd * theta + p.pe * (1.0 - theta) + p.eps_sum() * alloc.tau + alloc.pt * (1.0 - theta)
        - p.full_harvest(ch) * (1.0 - alloc.lambda) * theta
}

/// Transmit power at which matching the two hop rates needs λ = 1.
///
/// Returns `+inf` when the value overflows, which happens for θ close to 1.
pub fn pt_ceiling(p: &SystemParams, ch: &ChannelState, theta: f64) -> Result<f64> {
    if ch.g2 <= 0.0 {
        return domain("pt ceiling needs g2 > 0");
    }
    if !(theta > 0.0 && theta < 1.0) {
        return domain(format!("theta must lie in (0, 1), got {theta}"));
    }
    let exponent = theta / (1.0 - theta) * (p.q * ch.g1 / (2.0 * p.sigma2)).ln_1p();
    Ok(2.0 * p.sigma2 / ch.g2 * exponent.exp_m1())
}

/// λ that makes the source to relay rate equal the relay to destination rate
/// at transmit power `pt`, without range checks.
pub(crate) fn matched_split_unchecked(p: &SystemParams, ch: &ChannelState, theta: f64, pt: f64) -> f64 {
    split_from_log_snr(p, ch, theta, snr_rd(p, ch, pt).ln_1p())
}

/// Matched λ given ln(1 + snr_rd).
fn split_from_log_snr(p: &SystemParams, ch: &ChannelState, theta: f64, log_snr: f64) -> f64 {
    // (1 + snr_rd)^((1-θ)/θ) - 1 = snr_sr, solved for λ via x = λ/(1+λ).
    let growth = ((1.0 - theta) / theta * log_snr).exp_m1();
    let x = growth * p.sigma2 / (p.q * ch.g1);
    x / (1.0 - x)
}

/// Power-splitting ratio that equalises the two hop rates at fixed θ and P_t.
///
/// Equals 0 at `pt = 0` and 1 at [`pt_ceiling`]; errors outside that range.
pub fn matched_split(p: &SystemParams, ch: &ChannelState, theta: f64, pt: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return domain(format!("theta must lie in (0, 1), got {theta}"));
    }
    if !(ch.g1 > 0.0 && ch.g2 > 0.0) {
        return domain("matched split needs g1 > 0 and g2 > 0");
    }
    if !(pt >= 0.0) {
        return domain(format!("pt must be nonnegative, got {pt}"));
    }
    let lambda = matched_split_unchecked(p, ch, theta, pt);
    if !(lambda >= 0.0) || lambda > 1.0 + 1e-9 {
        return domain(format!("pt = {pt} mW exceeds the ceiling for theta = {theta}"));
    }
    Ok(lambda.min(1.0))
}

/// Rate carried when both hops are matched; the same expression as [`rate_rd`].
pub fn matched_rate(p: &SystemParams, ch: &ChannelState, theta: f64, pt: f64) -> f64 {
    rate_rd(p, ch, pt, theta)
}

/// Energy balance at fixed θ after eliminating λ and τ through rate matching.
///
/// Positive at `pt = 0` whenever θ > θ₀, nonpositive at the ceiling, and
/// strictly decreasing in between. Its root is the optimal transmit power.
pub fn energy_balance_residual(p: &SystemParams, ch: &ChannelState, theta: f64, pt: f64) -> f64 {
    let log_snr = snr_rd(p, ch, pt).ln_1p();
    let lambda = split_from_log_snr(p, ch, theta, log_snr);
    // Same operation order as rate_rd.
    let tau = (1.0 - theta) / p.t0 * log_snr / LN_2;
    p.full_harvest(ch) * theta * (1.0 - lambda)
        - theta * p.pd
        - (1.0 - theta) * p.pe
        - p.eps_sum() * tau
        - (1.0 - theta) * pt
}

/// Smallest time ratio for which harvesting can cover the static circuit power.
pub fn theta0(p: &SystemParams, ch: &ChannelState) -> Result<f64> {
    let harvest = p.full_harvest(ch);
    if harvest <= p.pd {
        return domain(format!(
            "harvested power {harvest} mW does not exceed decoder static power {} mW",
            p.pd
        ));
    }
    Ok(p.pe / (harvest + p.pe - p.pd))
}
