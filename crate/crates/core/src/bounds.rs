//! Closed-form throughput lower bound from a θ = 1/2 allocation.
//!
//! At θ = 1/2 the matched rate is concave in P_t and the harvested share
//! ηQg₁(1 − λ) is concave too. Replacing the rate by a tangent from above and
//! the harvest by a chord from below turns the energy balance into a linear
//! equation in P_t whose solution gives a rate that is always achievable.
//!
//! [`half_theta_pt`] and [`lower_bound_tau`] use the published linearisation,
//! whose rate slope is `g₂/(4T₀σ²)`. With base-2 rates the true tangent slope
//! is larger by 1/ln 2, so the published point can overdraw the energy budget
//! slightly; [`certified_half_theta_pt`] and [`certified_lower_bound_tau`]
//! use the exact tangent and always yield a feasible point.

use std::f64::consts::LN_2;

use crate::error::{domain, Result};
use crate::model::{matched_split, ChannelState, SystemParams};

/// Tangent at P_t = 0 of the θ = 1/2 matched rate; an upper bound for it.
pub fn tangent_rate_bound(p: &SystemParams, ch: &ChannelState, pt: f64) -> f64 {
    ch.g2 * pt / (4.0 * p.t0 * p.sigma2 * LN_2)
}

/// Chord of the θ = 1/2 harvested power between P_t = 0 and P_t = Qg₁/g₂;
/// a lower bound for ηQg₁(1 − λ).
pub fn chord_harvest_bound(p: &SystemParams, ch: &ChannelState, pt: f64) -> Result<f64> {
    let top = p.q * ch.g1 / ch.g2;
    if !(pt >= 0.0 && pt <= top) {
        return domain(format!("pt = {pt} outside [0, {top}]"));
    }
    Ok(p.eta * (p.q * ch.g1 - pt * ch.g2))
}

/// Exact harvested power ηQg₁(1 − λ) at θ = 1/2 with rate matching.
pub fn half_theta_harvest(p: &SystemParams, ch: &ChannelState, pt: f64) -> Result<f64> {
    Ok(p.full_harvest(ch) * (1.0 - matched_split(p, ch, 0.5, pt)?))
}

fn linearised_pt(p: &SystemParams, ch: &ChannelState, rate_slope: f64) -> f64 {
    (p.full_harvest(ch) - p.pd - p.pe) / (1.0 + p.eta * ch.g2 + p.eps_sum() * rate_slope * 2.0)
}

/// Transmit power solving the linearised θ = 1/2 energy balance, as published.
/// Negative when ηQg₁ < P_d + P_e.
pub fn half_theta_pt(p: &SystemParams, ch: &ChannelState) -> f64 {
    linearised_pt(p, ch, ch.g2 / (4.0 * p.t0 * p.sigma2))
}

/// Published closed-form lower bound on the optimal source rate.
pub fn lower_bound_tau(p: &SystemParams, ch: &ChannelState) -> f64 {
    let surplus = p.full_harvest(ch) - p.pd - p.pe;
    if surplus <= 0.0 || ch.g2 <= 0.0 {
        return 0.0;
    }
    let denom = 2.0 * p.sigma2 / ch.g2 + 2.0 * p.sigma2 * p.eta + p.eps_sum() / p.t0;
    (1.0 / (2.0 * p.t0) * (surplus / denom).ln_1p() / LN_2).max(0.0)
}

/// [`half_theta_pt`] with the exact base-2 tangent slope.
pub fn certified_half_theta_pt(p: &SystemParams, ch: &ChannelState) -> f64 {
    linearised_pt(p, ch, tangent_rate_bound(p, ch, 1.0))
}

/// Lower bound on the optimal rate backed by a feasible θ = 1/2 allocation.
pub fn certified_lower_bound_tau(p: &SystemParams, ch: &ChannelState) -> f64 {
    let surplus = p.full_harvest(ch) - p.pd - p.pe;
    if surplus <= 0.0 || ch.g2 <= 0.0 {
        return 0.0;
    }
    let denom = 2.0 * p.sigma2 / ch.g2 + 2.0 * p.sigma2 * p.eta + p.eps_sum() / (p.t0 * LN_2);
    (1.0 / (2.0 * p.t0) * (surplus / denom).ln_1p() / LN_2).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy_excess, matched_rate, Allocation};

    fn defaults() -> (SystemParams, ChannelState) {
        (SystemParams::default(), ChannelState { g1: 0.3, g2: 0.1 })
    }

    #[test]
    fn tangent_examples() {
        let (p, ch) = defaults();
        assert_eq!(tangent_rate_bound(&p, &ch, 0.0), 0.0);
        let at200 = tangent_rate_bound(&p, &ch, 200.0);
        assert!((at200 - 1000.0 / LN_2).abs() < 1e-9);
        assert!((matched_rate(&p, &ch, 0.5, 200.0) - 1000.0).abs() < 1e-9);
        assert!((tangent_rate_bound(&p, &ch, 400.0) - 2.0 * at200).abs() < 1e-9);
    }

    #[test]
    fn tangent_dominates_rate() {
        let (p, ch) = defaults();
        for i in 0..=2000 {
            let pt = i as f64 * 2.0;
            assert!(tangent_rate_bound(&p, &ch, pt) >= matched_rate(&p, &ch, 0.5, pt));
        }
    }

    #[test]
    fn chord_examples() {
        let (p, ch) = defaults();
        let top = p.q * ch.g1 / ch.g2;
        let full = p.full_harvest(&ch);
        assert!((chord_harvest_bound(&p, &ch, 0.0).unwrap() - full).abs() < 1e-12);
        assert!((half_theta_harvest(&p, &ch, 0.0).unwrap() - full).abs() < 1e-12);
        assert!(chord_harvest_bound(&p, &ch, top).unwrap().abs() < 1e-9);
        assert!(half_theta_harvest(&p, &ch, top).unwrap().abs() < 1e-9);
        let mid = chord_harvest_bound(&p, &ch, top / 2.0).unwrap();
        let exact = half_theta_harvest(&p, &ch, top / 2.0).unwrap();
        assert!((mid - full / 2.0).abs() < 1e-9);
        assert!((exact - 2.0 * full / 3.0).abs() < 1e-9);
        assert!(chord_harvest_bound(&p, &ch, top * 1.001).is_err());
        for i in 0..=1000 {
            let pt = top * i as f64 / 1000.0;
            let exact = half_theta_harvest(&p, &ch, pt).unwrap();
            assert!(chord_harvest_bound(&p, &ch, pt).unwrap() <= exact + 1e-9);
        }
    }

    #[test]
    fn half_theta_pt_examples() {
        let (p, ch) = defaults();
        assert!((half_theta_pt(&p, &ch) - 48.076923076923077).abs() < 1e-12);
        let edge = ChannelState { g1: 0.05, g2: 0.1 };
        assert_eq!(half_theta_pt(&p, &edge), 0.0);
        assert!(half_theta_pt(&p, &ChannelState { g1: 0.04, g2: 0.1 }) < 0.0);
    }

    #[test]
    fn lower_bound_examples() {
        let (p, ch) = defaults();
        let lb = lower_bound_tau(&p, &ch);
        assert!((lb - 310.78753728216196).abs() < 1e-9 * 310.8);
        assert_eq!(lower_bound_tau(&p, &ChannelState { g1: 0.05, g2: 0.1 }), 0.0);
        let mut prev = 0.0;
        for i in 1..50 {
            let v = lower_bound_tau(&p, &ChannelState { g1: 0.02 * i as f64, g2: 0.1 });
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn certified_point_is_feasible() {
        let (p, ch) = defaults();
        let pt = certified_half_theta_pt(&p, &ch);
        let alloc = Allocation {
            tau: matched_rate(&p, &ch, 0.5, pt),
            lambda: matched_split(&p, &ch, 0.5, pt).unwrap(),
            pt,
            theta: 0.5,
        };
        assert!(energy_excess(&p, &ch, &alloc) <= 0.0);
        assert!((alloc.tau - certified_lower_bound_tau(&p, &ch)).abs() < 1e-9 * alloc.tau);
        assert!(certified_lower_bound_tau(&p, &ch) < lower_bound_tau(&p, &ch));
    }

    #[test]
    fn published_point_overdraws_energy_here() {
        let (p, ch) = defaults();
        let pt = half_theta_pt(&p, &ch);
        let alloc = Allocation {
            tau: matched_rate(&p, &ch, 0.5, pt),
            lambda: matched_split(&p, &ch, 0.5, pt).unwrap(),
            pt,
            theta: 0.5,
        };
        assert!(energy_excess(&p, &ch, &alloc) > 0.0);
    }
}
