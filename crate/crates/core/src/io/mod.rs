//! Problem files, result reports and the mesh sweep driver.

mod problem;
mod report;
mod sweep;

pub use problem::{
    emit_dual, emit_problem, emit_trajectory, parse_cost, parse_dual, parse_problem,
    parse_trajectory, ContinuousSpec, ParseError, ProblemSpec,
};
pub use report::{format_text, write_csv, ReportRow, CSV_HEADER};
pub use sweep::{
    best_primal, convergence_order, solve_instance, sweep, SweepReport, SWEEP_ORACLE_LIMIT,
};
