//! The viscous problem: Hamiltonians, the log-transformed eikonal solve, and
//! damped Newton for general semilinear equations.

mod eikonal;
mod hamiltonian;
mod newton;

pub use eikonal::{solve_eikonal_log, solve_eikonal_log_with, EikonalData, EikonalReport, Z_FLOOR};
pub use hamiltonian::*;
pub use newton::{solve_semilinear_newton, NewtonOptions, NewtonReport};
