//! Resource allocation for a dual-hop dynamic decode-and-forward relay that
//! harvests energy by power splitting and pays rate-dependent circuit power.
//!
//! The solver picks the source rate τ, the power-splitting ratio λ, the relay
//! transmit power P_t and the source to relay time ratio θ that maximise τ
//! for a given channel. [`oracle`] holds independent checks, [`mc`] the
//! Rician fading campaigns and [`cli`] the `swipt` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod mc;
pub mod model;
pub mod oracle;
pub mod solver;

pub use error::{Result, SwiptError};
pub use model::{Allocation, ChannelState, SystemParams};
pub use solver::{solve, solve_fixed_theta, SolveReport, SolverConfig, Status};
