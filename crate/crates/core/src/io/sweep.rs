//! Solves a continuous problem on a list of meshes and compares the values
//! with a reference limit.

use std::fmt;

use rayon::prelude::*;

use super::problem::ContinuousSpec;
use super::report::ReportRow;
use crate::convex::ExtReal;
use crate::discretization::{build_pda, MeshSpec};
use crate::duality::certify;
use crate::error::Result;
use crate::inclusion::{DiscreteProblem, InclusionMap};
use crate::solvers::{
    brute_primal, primal_grid_size, solve_dual, solve_primal, PrimalSolution, SolveOptions,
};

/// Largest grid for which the exhaustive primal oracle also runs inside a
/// sweep.
pub const SWEEP_ORACLE_LIMIT: f64 = 1e5;

/// Best primal solution: the subgradient solver, improved by the grid oracle
/// when that grid is small enough. Tabulated maps go to the oracle directly.
pub fn best_primal(p: &DiscreteProblem, opts: &SolveOptions) -> Result<PrimalSolution> {
    match p.map() {
        InclusionMap::Tabulated(_) => brute_primal(p, opts),
        InclusionMap::Semilinear(_) => {
            let mut sol = solve_primal(p, opts)?;
            if primal_grid_size(p, opts.grid_resolution) <= SWEEP_ORACLE_LIMIT {
                let grid = brute_primal(p, opts)?;
                if grid.value < sol.value {
                    sol.iterations += grid.iterations;
                    sol = PrimalSolution {
                        iterations: sol.iterations,
                        ..grid
                    };
                }
            }
            Ok(sol)
        }
    }
}

/// Primal solve, dual solve and certificate for one discrete instance.
/// Errors are folded into the row.
pub fn solve_instance(
    p: &DiscreteProblem,
    delta: Option<f64>,
    opts: &SolveOptions,
    cert_tol: f64,
) -> ReportRow {
    match try_instance(p, delta, opts, cert_tol) {
        Ok(row) => row,
        Err(e) => ReportRow::failed(delta, e.to_string()),
    }
}

fn try_instance(
    p: &DiscreteProblem,
    delta: Option<f64>,
    opts: &SolveOptions,
    cert_tol: f64,
) -> Result<ReportRow> {
    let primal = best_primal(p, opts)?;
    if p.map().as_semilinear().is_none() {
        let mut row = ReportRow::failed(
            delta,
            "dual solver and certificate need a semilinear map".into(),
        );
        row.primal = primal.value;
        row.iterations = primal.iterations;
        return Ok(row);
    }
    let dual = solve_dual(p, opts)?;
    let gap = primal
        .value
        .checked_sub(dual.value)
        .map_or(f64::NAN, ExtReal::to_f64);
    let mut row = ReportRow {
        delta,
        primal: primal.value,
        dual: dual.value,
        gap,
        el_residual_max: f64::NAN,
        trans_residual_max: f64::NAN,
        fenchel_residual: f64::NAN,
        iterations: primal.iterations + dual.iterations,
        converged: primal.converged && dual.converged,
        certified: false,
        error: None,
    };
    match certify(p, &primal, &dual.to_dual_variables(), cert_tol) {
        Ok(rep) => {
            row.el_residual_max = rep.el_residual_max();
            row.trans_residual_max = rep.trans_residual_max();
            row.fenchel_residual = rep.fenchel_terminal;
            row.certified = rep.passed();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    Ok(row)
}

/// Rows ordered by decreasing `δ`, with the observed convergence order when
/// a reference value is known.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<ReportRow>,
    pub reference: Option<f64>,
    /// Least-squares slope of `log|α_δ − reference|` against `log δ`.
    pub order: Option<f64>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "meshes: {}", self.rows.len())?;
        if let Some(r) = self.reference {
            write!(f, ", reference: {r}")?;
            match self.order {
                Some(o) => write!(f, ", observed order: {o:.3}")?,
                None => write!(f, ", observed order: n/a")?,
            }
        }
        for row in self.failures() {
            let d = row.delta.map_or_else(|| "-".to_string(), |d| d.to_string());
            write!(
                f,
                "\ndelta {d} failed: {}",
                row.error.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }
}

/// Runs every mesh of `spec` in parallel.
pub fn sweep(spec: &ContinuousSpec, opts: &SolveOptions, cert_tol: f64) -> Result<SweepReport> {
    opts.validate()?;
    let mut rows: Vec<ReportRow> = spec
        .meshes
        .par_iter()
        .map(|&mesh| mesh_row(spec, mesh, opts, cert_tol))
        .collect();
    rows.sort_by(|a, b| {
        b.delta
            .partial_cmp(&a.delta)
            .expect("mesh widths are finite")
    });
    let order = spec.reference.and_then(|r| convergence_order(&rows, r));
    Ok(SweepReport {
        rows,
        reference: spec.reference,
        order,
    })
}

fn mesh_row(
    spec: &ContinuousSpec,
    mesh: MeshSpec,
    opts: &SolveOptions,
    cert_tol: f64,
) -> ReportRow {
    match build_pda(&spec.problem, mesh) {
        Ok(p) => solve_instance(&p, Some(mesh.delta()), opts, cert_tol),
        Err(e) => ReportRow::failed(Some(mesh.delta()), e.to_string()),
    }
}

/// Slope of the least-squares line through `(log δ, log|α_δ − reference|)`,
/// over rows with a finite primal value off the reference.
pub fn convergence_order(rows: &[ReportRow], reference: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let d = r.delta?;
            let a = r.primal.finite().filter(|a| a.is_finite())?;
            let e = (a - reference).abs();
            (e > 0.0).then(|| (d.ln(), e.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
