//! Independent validators for the bisection solver.

mod bench;
mod grid;
mod interior_point;

pub use bench::{compare_flops, FlopComparison};
pub use grid::{brute_force_fixed_theta, brute_force_solve, brute_force_with_lambdas, GridSpec, OracleSolution};
pub use interior_point::{interior_point_fixed_theta, IpReport, FLOPS_PER_NEWTON_STEP};
