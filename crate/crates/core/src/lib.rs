//! Convex duality for Mayer problems governed by second-order discrete
//! inclusions `x_{t+2} ∈ F(x_t, x_{t+1})`.
//!
//! The crate is split along the computational pipeline:
//!
//! * [`convex`]: extended reals, compact convex sets, convex functions and
//!   their conjugates, infimal convolution on grids.
//! * [`inclusion`]: set-valued maps (semilinear or tabulated), their
//!   Hamiltonian and `M`-function, and the primal discrete problem.
//! * [`discretization`]: the mesh map `G = 2y − x + δ²F(x, (y − x)/δ)` and
//!   the conjugate/support transforms that carry a continuous problem onto a
//!   mesh.
//! * [`solvers`]: projected subgradient primal solver, reduced dual ascent,
//!   and brute-force oracles.
//! * [`duality`]: dual objectives, weak duality, and optimality certificates.
//! * [`io`]: problem files, CSV reports and the mesh sweep driver.

pub mod cli;
pub mod convex;
pub mod discretization;
pub mod duality;
pub mod error;
pub mod inclusion;
pub mod io;
pub mod solvers;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Concatenates vectors into one.
pub fn stack(parts: &[&Vector]) -> Vector {
    Vector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    )
}
