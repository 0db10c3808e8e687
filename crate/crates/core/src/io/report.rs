//! Per-instance result rows and their CSV/text rendering.

use std::fmt::Write as _;
use std::io::Write;

use crate::convex::ExtReal;

pub const CSV_HEADER: [&str; 9] = [
    "delta",
    "primal",
    "dual",
    "gap",
    "el_residual_max",
    "trans_residual_max",
    "fenchel_residual",
    "iterations",
    "converged",
];

/// Outcome of solving one instance (one mesh of a sweep, or a discrete
/// problem with `delta = None`). Failed instances carry `NaN` numbers and an
/// error message.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub delta: Option<f64>,
    pub primal: ExtReal,
    pub dual: ExtReal,
    pub gap: f64,
    pub el_residual_max: f64,
    pub trans_residual_max: f64,
    pub fenchel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certified: bool,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn failed(delta: Option<f64>, error: String) -> Self {
        ReportRow {
            delta,
            primal: ExtReal::Finite(f64::NAN),
            dual: ExtReal::Finite(f64::NAN),
            gap: f64::NAN,
            el_residual_max: f64::NAN,
            trans_residual_max: f64::NAN,
            fenchel_residual: f64::NAN,
            iterations: 0,
            converged: false,
            certified: false,
            error: Some(error),
        }
    }

    fn fields(&self) -> [String; 9] {
        [
            self.delta.map_or_else(String::new, num),
            ext(self.primal),
            ext(self.dual),
            num(self.gap),
            num(self.el_residual_max),
            num(self.trans_residual_max),
            num(self.fenchel_residual),
            self.iterations.to_string(),
            self.converged.to_string(),
        ]
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

fn ext(x: ExtReal) -> String {
    num(x.to_f64())
}

/// Writes the rows as CSV with [`CSV_HEADER`].
pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()
}

/// Human-readable table.
pub fn format_text(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>10} {:>14} {:>14} {:>10} {:>10} {:>10} {:>10} {:>7} {:>5}",
        "delta", "primal", "dual", "gap", "el_res", "trans_res", "fenchel", "iters", "conv"
    );
    for row in rows {
        let f = row.fields();
        let _ = writeln!(
            s,
            "{:>10} {:>14} {:>14} {:>10} {:>10} {:>10} {:>10} {:>7} {:>5}",
            if f[0].is_empty() { "-" } else { &f[0] },
            short(row.primal.to_f64()),
            short(row.dual.to_f64()),
            sci(row.gap),
            sci(row.el_residual_max),
            sci(row.trans_residual_max),
            sci(row.fenchel_residual),
            f[7],
            f[8]
        );
        if let Some(e) = &row.error {
            let _ = writeln!(s, "  error: {e}");
        }
    }
    s
}

fn short(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9}")
    } else {
        num(x)
    }
}

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{:.2e}", x + 0.0)
    } else {
        num(x)
    }
}
