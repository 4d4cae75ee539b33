//! Vanishing-viscosity solvers for Hamilton–Jacobi equations on metric graphs.
//!
//! A network is a finite graph whose edges are intervals `[0, l_j]`. Boundary
//! vertices carry Dirichlet data, transition vertices carry a weighted
//! Kirchhoff condition. The crate discretizes the viscous problem
//! `-eps u'' + H(y, u, u') = 0`, solves it, and compares the limit as
//! `eps -> 0` against an exact shortest-path oracle.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod exec;
pub mod field;
pub mod io;
pub mod linear_solver;
pub mod network;
pub mod oracle;
pub mod stochastic;
pub mod vanishing;
pub mod viscous;

pub use error::{Error, Result};
pub use exec::Execution;
