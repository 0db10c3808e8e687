//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or I/O error,
//! 3 certificate FAIL, 4 grid budget exceeded, 5 malformed JSON,
//! 6 schema violation.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::convex::ExtReal;
use crate::discretization::{build_pda, pascal_args, phi_lift_conjugate, MeshSpec};
use crate::duality::{certify, DualVariables};
use crate::error::Error;
use crate::inclusion::DiscreteProblem;
use crate::io::{
    best_primal, emit_dual, emit_trajectory, format_text, parse_cost, parse_dual, parse_problem,
    parse_trajectory, solve_instance, sweep, write_csv, ParseError, ProblemSpec, ReportRow,
    SweepReport,
};
use crate::solvers::{brute_dual, brute_primal, solve_dual, PrimalSolution, SolveOptions};
use crate::Vector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CERT_FAIL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_MALFORMED: i32 = 5;
pub const EXIT_SCHEMA: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "incdual",
    version,
    about = "Primal and dual solvers for second-order discrete inclusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the primal problem.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the dual problem.
    Dual {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check optimality conditions for a dual file and a primal trajectory.
    Certify {
        problem: PathBuf,
        /// Dual variables `{"xstar": [...], "mustar": [...]}`.
        #[arg(long)]
        dual: PathBuf,
        /// Primal trajectory `{"states": [...], "controls": [...]}`; solved
        /// for when omitted.
        #[arg(long)]
        primal: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Primal, dual and certificate per mesh (or for a discrete instance).
    Sweep {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a conjugate, a lifted conjugate or Pascal arguments.
    Conjugate {
        /// Expression file with an `op` of `conjugate`, `lift` or `pascal`.
        expr: Option<PathBuf>,
        /// Pascal order.
        #[arg(long, requires_all = ["delta", "input"], conflicts_with = "expr")]
        pascal: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma-separated scalar arguments `y0*,...,ym*`.
        #[arg(long = "in", value_delimiter = ',', allow_hyphen_values = true)]
        input: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive grid oracles.
    Oracle {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Certificate and stationarity tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iter", default_value_t = 2000)]
    max_iter: usize,
    /// Grid points per coordinate for the oracles.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Output file for the command's artifact.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl Common {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            rng_seed: self.seed,
            grid_resolution: self.grid,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug)]
enum Failure {
    Parse(ParseError),
    Lib(Error),
    Invalid(String),
    CertFail,
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Parse(ParseError::Malformed { .. }) => EXIT_MALFORMED,
            Failure::Parse(ParseError::Schema { .. }) => EXIT_SCHEMA,
            Failure::Parse(ParseError::Semantic { .. }) => EXIT_INVALID,
            Failure::Lib(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
            Failure::Lib(_) | Failure::Invalid(_) => EXIT_INVALID,
            Failure::CertFail => EXIT_CERT_FAIL,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Parse(e) => {
                    let _ = writeln!(err, "error: {e}");
                }
                Failure::Lib(e) => {
                    let _ = writeln!(err, "error: {e}");
                }
                Failure::Invalid(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
                Failure::CertFail => {}
            }
            f.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Solve { problem, common } => cmd_solve(&problem, &common, out),
        Command::Dual { problem, common } => cmd_dual(&problem, &common, out),
        Command::Certify {
            problem,
            dual,
            primal,
            common,
        } => cmd_certify(&problem, &dual, primal.as_deref(), &common, out),
        Command::Sweep { problem, common } => cmd_sweep(&problem, &common, out),
        Command::Conjugate {
            expr,
            pascal,
            delta,
            input,
            common,
        } => cmd_conjugate(expr.as_deref(), pascal, delta, input, &common, out),
        Command::Oracle { problem, common } => cmd_oracle(&problem, &common, out),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Invalid(format!("cannot write output: {e}")))
}

fn load(path: &Path) -> std::result::Result<ProblemSpec, Failure> {
    Ok(parse_problem(&read(path)?)?)
}

/// The discrete instances of a problem file with their mesh widths.
fn instances(
    spec: &ProblemSpec,
) -> std::result::Result<Vec<(Option<f64>, DiscreteProblem)>, Failure> {
    match spec {
        ProblemSpec::Discrete(p) => Ok(vec![(None, p.clone())]),
        ProblemSpec::Continuous(c) => c
            .meshes
            .iter()
            .map(|&m| Ok((Some(m.delta()), build_pda(&c.problem, m)?)))
            .collect(),
    }
}

fn single_out(common: &Common, count: usize) -> Outcome {
    if common.out.is_some() && count != 1 {
        return Err(Failure::Invalid(
            "--out needs a problem with exactly one instance".into(),
        ));
    }
    Ok(())
}

fn label(delta: Option<f64>) -> String {
    delta.map_or_else(String::new, |d| format!("[delta {d}] "))
}

fn vectors(vs: &[Vector]) -> String {
    let items: Vec<String> = vs
        .iter()
        .map(|v| {
            if v.len() == 1 {
                v[0].to_string()
            } else {
                let c: Vec<String> = v.iter().map(f64::to_string).collect();
                format!("({})", c.join(", "))
            }
        })
        .collect();
    format!("[{}]", items.join(", "))
}

fn csv_rows(rows: &[ReportRow], out: &mut dyn Write) -> Outcome {
    write_csv(rows, out).map_err(|e| Failure::Invalid(format!("cannot write CSV: {e}")))
}

fn primal_row(delta: Option<f64>, sol: &PrimalSolution) -> ReportRow {
    let mut row = ReportRow::failed(delta, String::new());
    row.error = None;
    row.primal = sol.value;
    row.iterations = sol.iterations;
    row.converged = sol.converged;
    row
}

fn cmd_solve(path: &Path, common: &Common, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let insts = instances(&spec)?;
    single_out(common, insts.len())?;
    let opts = common.options();
    let mut rows = Vec::new();
    let mut text = String::new();
    for (delta, p) in &insts {
        let sol = best_primal(p, &opts)?;
        let _ = writeln!(text, "{}primal value: {}", label(*delta), sol.value);
        let _ = writeln!(
            text,
            "  iterations: {}, converged: {}",
            sol.iterations, sol.converged
        );
        if let Some(s) = sol.stationarity {
            let _ = writeln!(text, "  stationarity: {s:.3e}");
        }
        match &sol.trajectory {
            Some(t) => {
                let _ = writeln!(text, "  states: {}", vectors(&t.states));
                let _ = writeln!(text, "  controls: {}", vectors(&t.controls));
                if let Some(o) = &common.out {
                    write_file(o, &emit_trajectory(t))?;
                }
            }
            None => {
                let _ = writeln!(text, "  no feasible trajectory");
            }
        }
        rows.push(primal_row(*delta, &sol));
    }
    match common.format {
        Format::Text => emit(out, &text),
        Format::Csv => csv_rows(&rows, out),
    }
}

fn cmd_dual(path: &Path, common: &Common, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let insts = instances(&spec)?;
    single_out(common, insts.len())?;
    let opts = common.options();
    let mut rows = Vec::new();
    let mut text = String::new();
    for (delta, p) in &insts {
        let sol = solve_dual(p, &opts)?;
        let _ = writeln!(text, "{}dual value: {}", label(*delta), sol.value);
        let _ = writeln!(
            text,
            "  evaluations: {}, converged: {}",
            sol.iterations, sol.converged
        );
        if sol.domain_empty {
            let _ = writeln!(text, "  dual objective is -inf on every probed seed");
        }
        let _ = writeln!(text, "  xstar: {}", vectors(&sol.xstar));
        let _ = writeln!(text, "  mustar: {}", vectors(&sol.mustar));
        if let Some(o) = &common.out {
            write_file(o, &emit_dual(&sol.to_dual_variables()))?;
        }
        let mut row = ReportRow::failed(*delta, String::new());
        row.error = None;
        row.dual = sol.value;
        row.iterations = sol.iterations;
        row.converged = sol.converged;
        rows.push(row);
    }
    match common.format {
        Format::Text => emit(out, &text),
        Format::Csv => csv_rows(&rows, out),
    }
}

fn cmd_certify(
    path: &Path,
    dual: &Path,
    primal: Option<&Path>,
    common: &Common,
    out: &mut dyn Write,
) -> Outcome {
    let ProblemSpec::Discrete(p) = load(path)? else {
        return Err(Failure::Invalid("certify needs a discrete problem".into()));
    };
    let dv: DualVariables = parse_dual(&read(dual)?)?;
    let ps = match primal {
        Some(file) => {
            let traj = parse_trajectory(&read(file)?)?;
            let value = p.terminal_value(&traj)?;
            PrimalSolution {
                trajectory: Some(traj),
                value,
                iterations: 0,
                converged: true,
                stationarity: None,
            }
        }
        None => best_primal(&p, &common.options())?,
    };
    let rep = certify(&p, &ps, &dv, common.tol)?;
    let text = format!("{rep}\n");
    if let Some(o) = &common.out {
        write_file(o, &text)?;
    }
    match common.format {
        Format::Text => emit(out, &text)?,
        Format::Csv => {
            let row = ReportRow {
                delta: None,
                primal: rep.primal_value,
                dual: rep.dual_value,
                gap: rep.gap.to_f64(),
                el_residual_max: rep.el_residual_max(),
                trans_residual_max: rep.trans_residual_max(),
                fenchel_residual: rep.fenchel_terminal,
                iterations: ps.iterations,
                converged: rep.passed(),
                certified: rep.passed(),
                error: None,
            };
            csv_rows(&[row], out)?;
        }
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::CertFail)
    }
}

fn cmd_sweep(path: &Path, common: &Common, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let opts = common.options();
    let report = match &spec {
        ProblemSpec::Discrete(p) => {
            opts.validate()?;
            SweepReport {
                rows: vec![solve_instance(p, None, &opts, common.tol)],
                reference: None,
                order: None,
            }
        }
        ProblemSpec::Continuous(c) => sweep(c, &opts, common.tol)?,
    };
    if let Some(o) = &common.out {
        let mut buf = Vec::new();
        csv_rows(&report.rows, &mut buf)?;
        write_file(o, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    }
    match common.format {
        Format::Text => emit(out, &format!("{}{report}\n", format_text(&report.rows))),
        Format::Csv => csv_rows(&report.rows, out),
    }
}

fn cmd_oracle(path: &Path, common: &Common, out: &mut dyn Write) -> Outcome {
    let spec = load(path)?;
    let insts = instances(&spec)?;
    single_out(common, insts.len())?;
    let opts = common.options();
    let mut rows = Vec::new();
    let mut text = String::new();
    for (delta, p) in &insts {
        let primal = brute_primal(p, &opts)?;
        let _ = writeln!(text, "{}grid primal value: {}", label(*delta), primal.value);
        let _ = writeln!(text, "  points: {}", primal.iterations);
        if let Some(t) = &primal.trajectory {
            let _ = writeln!(text, "  states: {}", vectors(&t.states));
            if let Some(o) = &common.out {
                write_file(o, &emit_trajectory(t))?;
            }
        }
        let mut row = primal_row(*delta, &primal);
        let semilinear_small = p.map().as_semilinear().is_some() && p.state_dim() <= 2;
        if semilinear_small {
            let dual = brute_dual(p, &opts)?;
            let _ = writeln!(text, "  grid dual value: {}", dual.value);
            let _ = writeln!(
                text,
                "  dual seed: {}",
                vectors(&dual.xstar[dual.xstar.len() - 2..])
            );
            row.dual = dual.value;
            row.gap = primal
                .value
                .checked_sub(dual.value)
                .map_or(f64::NAN, ExtReal::to_f64);
            row.iterations += dual.iterations;
        }
        rows.push(row);
    }
    match common.format {
        Format::Text => emit(out, &text),
        Format::Csv => csv_rows(&rows, out),
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
enum Expr {
    Conjugate {
        phi: serde_json::Value,
        p: Vec<f64>,
    },
    Lift {
        phi: serde_json::Value,
        delta: f64,
        xstar: Vec<f64>,
        ystar: Vec<f64>,
    },
    Pascal {
        order: usize,
        delta: f64,
        #[serde(rename = "in")]
        input: Vec<Vec<f64>>,
    },
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_conjugate(
    expr: Option<&Path>,
    pascal: Option<usize>,
    delta: Option<f64>,
    input: Option<Vec<f64>>,
    common: &Common,
    out: &mut dyn Write,
) -> Outcome {
    let line = match (expr, pascal) {
        (None, Some(order)) => {
            let delta = delta.expect("clap enforces --delta");
            let ys: Vec<Vector> = input
                .expect("clap enforces --in")
                .into_iter()
                .map(|y| Vector::from_element(1, y))
                .collect();
            let args = pascal_args(order, delta, &ys)?;
            join(args.iter().map(|v| v[0]))
        }
        (Some(file), None) => {
            let text = read(file)?;
            let expr: Expr = serde_json::from_str(&text).map_err(|e| {
                let (line, column, message) = (e.line(), e.column(), e.to_string());
                Failure::Parse(match e.classify() {
                    serde_json::error::Category::Data => ParseError::Schema {
                        line,
                        column,
                        message,
                    },
                    _ => ParseError::Malformed {
                        line,
                        column,
                        message,
                    },
                })
            })?;
            match expr {
                Expr::Conjugate { phi, p } => {
                    let f = parse_cost(phi, p.len())?;
                    f.conjugate(&Vector::from_vec(p))?.to_string()
                }
                Expr::Lift {
                    phi,
                    delta,
                    xstar,
                    ystar,
                } => {
                    if xstar.len() != ystar.len() {
                        return Err(Failure::Invalid(
                            "xstar and ystar must have the same length".into(),
                        ));
                    }
                    MeshSpec::from_delta(delta)?;
                    let f = parse_cost(phi, 2 * xstar.len())?;
                    phi_lift_conjugate(
                        &f,
                        delta,
                        &Vector::from_vec(xstar),
                        &Vector::from_vec(ystar),
                    )?
                    .to_string()
                }
                Expr::Pascal {
                    order,
                    delta,
                    input,
                } => {
                    let ys: Vec<Vector> = input.into_iter().map(Vector::from_vec).collect();
                    let args = pascal_args(order, delta, &ys)?;
                    args.iter()
                        .map(|v| join(v.iter().copied()))
                        .collect::<Vec<_>>()
                        .join(";")
                }
            }
        }
        (None, None) => {
            return Err(Failure::Invalid(
                "conjugate needs an expression file or --pascal/--delta/--in".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let text = format!("{line}\n");
    if let Some(o) = &common.out {
        write_file(o, &text)?;
    }
    emit(out, &text)
}
