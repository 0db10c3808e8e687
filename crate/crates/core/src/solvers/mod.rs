//! Numerical solvers for the primal problem and the reduced semilinear dual,
//! plus exhaustive grid oracles for small instances.

mod brute;
mod dual;
mod primal;

pub use brute::{brute_dual, brute_primal, dual_grid_search, primal_grid_size, GRID_BUDGET};
pub use dual::{reduced_dual_objective, solve_dual};
pub use primal::solve_primal;

use crate::convex::ExtReal;
use crate::duality::DualVariables;
use crate::error::{check_dim, Error, Result};
use crate::inclusion::Trajectory;
use crate::{Matrix, Vector};

/// Tuning knobs shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Iterations per start for the subgradient phase, and for the polish phase.
    pub max_iter: usize,
    /// Step scale; the subgradient phase uses `step0·D/√k`.
    pub step0: f64,
    /// Stationarity tolerance used for the `converged` flag.
    pub tol: f64,
    /// Random starts in addition to the deterministic one.
    pub restarts: usize,
    pub rng_seed: u64,
    /// Points per coordinate for the grid oracles.
    pub grid_resolution: usize,
    /// Half-width of the seed box searched by [`brute_dual`] and of the
    /// random dual starts.
    pub seed_radius: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 2000,
            step0: 1.0,
            tol: 1e-8,
            restarts: 4,
            rng_seed: 0,
            grid_resolution: 101,
            seed_radius: 3.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidProblem("max_iter must be >= 1".into()));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "step0 must be > 0, got {}",
                self.step0
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.grid_resolution == 0 {
            return Err(Error::InvalidProblem("grid resolution must be >= 1".into()));
        }
        if !(self.seed_radius > 0.0 && self.seed_radius.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "seed radius must be > 0, got {}",
                self.seed_radius
            )));
        }
        Ok(())
    }
}

/// Best primal point found; `trajectory` is `None` when the problem has no
/// feasible trajectory (value `+∞`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub trajectory: Option<Trajectory>,
    pub value: ExtReal,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient residual `‖z − P(z − ∇f(z))‖` at the returned
    /// point, when measured.
    pub stationarity: Option<f64>,
}

/// Best dual point found, on the adjoint subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub xstar: Vec<Vector>,
    pub mustar: Vec<Vector>,
    pub value: ExtReal,
    pub iterations: usize,
    pub converged: bool,
    /// Every probed seed gave `−∞`.
    pub domain_empty: bool,
}

impl DualSolution {
    pub fn to_dual_variables(&self) -> DualVariables {
        DualVariables {
            xstar: self.xstar.clone(),
            mustar: self.mustar.clone(),
        }
    }

    pub fn seed(&self) -> (&Vector, &Vector) {
        let n = self.xstar.len();
        (&self.xstar[n - 2], &self.xstar[n - 1])
    }
}

/// Backward adjoint recursion `x*_t = A0ᵀx*_{t+2} + A1ᵀx*_{t+1}` from the
/// seed `(x*_{N−1}, x*_N)`; returns `x*_0 … x*_N`.
pub fn adjoint_recursion(
    a0: &Matrix,
    a1: &Matrix,
    seed_nm1: &Vector,
    seed_n: &Vector,
    horizon: usize,
) -> Result<Vec<Vector>> {
    if horizon < 2 {
        return Err(Error::InvalidProblem(format!(
            "horizon must be >= 2, got {horizon}"
        )));
    }
    let n = a0.nrows();
    check_dim("adjoint seed", n, seed_nm1.len())?;
    check_dim("adjoint seed", n, seed_n.len())?;
    let a0t = a0.transpose();
    let a1t = a1.transpose();
    let mut xs = vec![Vector::zeros(n); horizon + 1];
    xs[horizon] = seed_n.clone();
    xs[horizon - 1] = seed_nm1.clone();
    for t in (0..horizon - 1).rev() {
        xs[t] = &a0t * &xs[t + 2] + &a1t * &xs[t + 1];
    }
    Ok(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    fn m(x: f64) -> Matrix {
        Matrix::from_element(1, 1, x)
    }

    #[test]
    fn adjoint_recursion_examples() {
        let xs = adjoint_recursion(&m(0.0), &m(1.0), &s(5.0), &s(7.0), 3).unwrap();
        assert_eq!(xs, vec![s(5.0), s(5.0), s(5.0), s(7.0)]);
        let (a, b) = (2.5, -4.0);
        let xs = adjoint_recursion(&m(1.0), &m(0.0), &s(a), &s(b), 4).unwrap();
        assert_eq!(xs, vec![s(b), s(a), s(b), s(a), s(b)]);
        let xs = adjoint_recursion(&m(0.0), &m(0.0), &s(3.0), &s(-1.0), 5).unwrap();
        assert!(xs[..4].iter().all(|x| x[0] == 0.0));
        assert!(adjoint_recursion(&m(0.0), &m(0.0), &s(3.0), &s(-1.0), 1).is_err());
    }

    #[test]
    fn options_validation() {
        assert!(SolveOptions::default().validate().is_ok());
        let bad = SolveOptions {
            max_iter: 0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            step0: -1.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
