//! Log-barrier interior-point reference for the fixed-θ subproblem.
//!
//! Maximises τ over (τ, λ, P_t) subject to both rate constraints, the energy
//! constraint and the box bounds, using damped Newton steps on the barrier
//! function. Variables are scaled to O(1): τ by the largest S-R rate, P_t by
//! the largest power the static energy budget allows.
//!
//! Only the 3×3 Newton solve is charged to the FLOP count
//! ([`FLOPS_PER_NEWTON_STEP`] per step), the same convention under which a
//! bisection step costs three.

use std::f64::consts::LN_2;

use crate::error::{domain, Result, SwiptError};
use crate::model::{rate_rd, rate_sr, theta0, ChannelState, SystemParams};

/// Gaussian elimination on the 3×3 Newton system.
pub const FLOPS_PER_NEWTON_STEP: u64 = 27;

const CONSTRAINTS: usize = 7;
const MAX_NEWTON_STEPS: u64 = 2000;
const MAX_STAGES: usize = 60;
const CENTERING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct IpReport {
    pub tau: f64,
    pub lambda: f64,
    pub pt: f64,
    /// Newton steps over all centering stages.
    pub iterations: u64,
    pub flops: u64,
    /// (barrier weight, τ) after each centering stage.
    pub barrier_path: Vec<(f64, f64)>,
}

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

struct Subproblem {
    theta: f64,
    tau_scale: f64,
    pt_scale: f64,
    harvest: f64,
    static_cost: f64,
    eps: f64,
    // R1(λ) = k1·ln(1 + sλ/(1+λ)), R2(P_t) = k2·ln(1 + a P_t)
    k1: f64,
    s: f64,
    k2: f64,
    a: f64,
}

struct Constraint {
    value: f64,
    grad: Vec3,
    hess_diag: Vec3,
}

impl Subproblem {
    fn new(p: &SystemParams, ch: &ChannelState, theta: f64) -> Self {
        Subproblem {
            theta,
            tau_scale: rate_sr(p, ch, 1.0, theta),
            pt_scale: p.static_slack(ch, theta) / (1.0 - theta),
            harvest: p.full_harvest(ch) * theta,
            static_cost: p.pd * theta + p.pe * (1.0 - theta),
            eps: p.eps_sum(),
            k1: theta / (p.t0 * LN_2),
            s: p.q * ch.g1 / p.sigma2,
            k2: (1.0 - theta) / (p.t0 * LN_2),
            a: ch.g2 / (2.0 * p.sigma2),
        }
    }

    /// Scaled S-R rate and its first two derivatives in λ.
    fn r1(&self, l: f64) -> (f64, f64, f64) {
        let s = self.s;
        let d = 1.0 + (2.0 + s) * l + (1.0 + s) * l * l;
        let dd = (2.0 + s) + 2.0 * (1.0 + s) * l;
        let v = self.k1 * (s * l / (1.0 + l)).ln_1p();
        let d1 = self.k1 * s / d;
        let d2 = -self.k1 * s * dd / (d * d);
        (v / self.tau_scale, d1 / self.tau_scale, d2 / self.tau_scale)
    }

    /// Scaled R-D rate and its first two derivatives in the scaled power.
    fn r2(&self, q: f64) -> (f64, f64, f64) {
        let pt = q * self.pt_scale;
        let z = 1.0 + self.a * pt;
        let v = self.k2 * (self.a * pt).ln_1p();
        let d1 = self.k2 * self.a / z * self.pt_scale;
        let d2 = -self.k2 * self.a * self.a / (z * z) * self.pt_scale * self.pt_scale;
        (v / self.tau_scale, d1 / self.tau_scale, d2 / self.tau_scale)
    }

    fn constraints(&self, y: &Vec3) -> [Constraint; CONSTRAINTS] {
        let [t, l, q] = *y;
        let (r1, d_r1, dd_r1) = self.r1(l);
        let (r2, d_r2, dd_r2) = self.r2(q);
        let h = self.harvest;
        let linear = |value: f64, grad: Vec3| Constraint {
            value,
            grad,
            hess_diag: [0.0; 3],
        };
        [
            Constraint {
                value: t - r1,
                grad: [1.0, -d_r1, 0.0],
                hess_diag: [0.0, -dd_r1, 0.0],
            },
            Constraint {
                value: t - r2,
                grad: [1.0, 0.0, -d_r2],
                hess_diag: [0.0, 0.0, -dd_r2],
            },
            linear(
                (self.static_cost + self.eps * self.tau_scale * t + self.pt_scale * q * (1.0 - self.theta)
                    - h * (1.0 - l))
                    / h,
                [self.eps * self.tau_scale / h, 1.0, self.pt_scale * (1.0 - self.theta) / h],
            ),
            linear(-t, [-1.0, 0.0, 0.0]),
            linear(-l, [0.0, -1.0, 0.0]),
            linear(-q, [0.0, 0.0, -1.0]),
            linear(l - 1.0, [0.0, 1.0, 0.0]),
        ]
    }

    fn strictly_feasible(&self, y: &Vec3) -> bool {
        self.constraints(y).iter().all(|c| c.value < 0.0)
    }

    fn barrier(&self, y: &Vec3, mu: f64) -> f64 {
        let log_sum: f64 = self.constraints(y).iter().map(|c| (-c.value).ln()).sum();
        -y[0] - mu * log_sum
    }

    fn gradient_hessian(&self, y: &Vec3, mu: f64) -> (Vec3, Mat3) {
        let mut grad = [-1.0, 0.0, 0.0];
        let mut hess = [[0.0; 3]; 3];
        for c in self.constraints(y) {
            let inv = -1.0 / c.value;
            for i in 0..3 {
                grad[i] += mu * c.grad[i] * inv;
                hess[i][i] += mu * c.hess_diag[i] * inv;
                for j in 0..3 {
                    hess[i][j] += mu * c.grad[i] * c.grad[j] * inv * inv;
                }
            }
        }
        (grad, hess)
    }

    /// Strictly feasible start: a quarter of the static slack each to the
    /// power term and the split, then half of the smallest admissible rate.
    fn start(&self) -> Vec3 {
        let slack = self.harvest - self.static_cost;
        let l = slack / (4.0 * self.harvest);
        let q = 0.25;
        let mut t = self.r1(l).0.min(self.r2(q).0);
        if self.eps > 0.0 {
            t = t.min(slack / (2.0 * self.eps * self.tau_scale));
        }
        [0.5 * t, l, q]
    }
}

fn solve3(mut m: Mat3, mut b: Vec3) -> Option<Vec3> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Maximise τ at fixed θ with a barrier method; stops once the duality gap
/// bound `m·μ` falls below `tol` times the current scaled rate.
pub fn interior_point_fixed_theta(p: &SystemParams, ch: &ChannelState, theta: f64, tol: f64) -> Result<IpReport> {
    let theta0 = match theta0(p, ch) {
        Ok(t) if ch.g2 > 0.0 => t,
        _ => return domain("infeasible channel"),
    };
    if !(theta > theta0 && theta < 1.0) {
        return domain(format!("theta = {theta} outside ({theta0}, 1)"));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }

    let sub = Subproblem::new(p, ch, theta);
    let mut y = sub.start();
    if !sub.strictly_feasible(&y) {
        return Err(SwiptError::Convergence("no strictly feasible starting point".into()));
    }

    let mut mu = 1.0;
    let mut iterations = 0u64;
    let mut path = Vec::new();
    for _ in 0..MAX_STAGES {
        loop {
            let (grad, hess) = sub.gradient_hessian(&y, mu);
            let Some(step) = solve3(hess, [-grad[0], -grad[1], -grad[2]]) else {
                return Err(SwiptError::Convergence("singular Newton system".into()));
            };
            iterations += 1;
            if iterations > MAX_NEWTON_STEPS {
                return Err(SwiptError::Convergence(format!(
                    "no convergence after {MAX_NEWTON_STEPS} Newton steps"
                )));
            }
            let decrement = -dot(&grad, &step);
            if decrement / 2.0 <= CENTERING_TOL {
                break;
            }

            let current = sub.barrier(&y, mu);
            let mut s = 1.0;
            let trial = |s: f64| [y[0] + s * step[0], y[1] + s * step[1], y[2] + s * step[2]];
            while !sub.strictly_feasible(&trial(s)) {
                s *= 0.5;
            }
            while sub.barrier(&trial(s), mu) > current - 0.25 * s * decrement {
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
            if s < 1e-14 {
                // Rounding floor: close enough to the centre to move on.
                if decrement / 2.0 < 1e-7 {
                    break;
                }
                return Err(SwiptError::Convergence(format!(
                    "line search stalled with Newton decrement {decrement:e}"
                )));
            }
            y = trial(s);
        }
        path.push((mu, y[0] * sub.tau_scale));
        if CONSTRAINTS as f64 * mu <= tol * y[0] {
            let tau = y[0] * sub.tau_scale;
            debug_assert!(tau <= rate_rd(p, ch, y[2] * sub.pt_scale, theta) * (1.0 + 1e-12));
            return Ok(IpReport {
                tau,
                lambda: y[1],
                pt: y[2] * sub.pt_scale,
                iterations,
                flops: FLOPS_PER_NEWTON_STEP * iterations,
                barrier_path: path,
            });
        }
        mu /= 10.0;
    }
    Err(SwiptError::Convergence(format!("barrier weight schedule exhausted after {MAX_STAGES} stages")))
}
