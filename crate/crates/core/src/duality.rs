//! Dual objectives, weak duality and the Euler–Lagrange/transversality
//! optimality certificate.
//!
//! For a discrete problem with horizon `N` the dual objective is
//!
//! ```text
//! −φ*(μ*_{N−1} − x*_{N−1}, −x*_N)
//!   + Σ_{t=0}^{N−2} M_F(x*_t − μ*_t, μ*_{t+1}, x*_{t+2})
//!   − W_Q0(x*_0 − μ*_0) − W_Q1(x*_1)
//! ```

use std::fmt;

use crate::convex::{fenchel_residual, support_attainment_residual, ExtReal};
use crate::error::{check_dim, Error, Result};
use crate::inclusion::{DiscreteProblem, SemilinearMap};
use crate::solvers::PrimalSolution;
use crate::{stack, Vector};

pub use crate::discretization::dual_objective_da;

/// Default residual tolerance of [`certify`].
pub const DEFAULT_CERT_TOL: f64 = 1e-8;

/// Largest constraint violation accepted for a trajectory handed to [`certify`].
pub const PRIMAL_FEAS_TOL: f64 = 1e-7;

/// Dual sequences `x*_0 … x*_N` and `μ*_0 … μ*_{N−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVariables {
    pub xstar: Vec<Vector>,
    pub mustar: Vec<Vector>,
}

impl DualVariables {
    pub fn new(xstar: Vec<Vector>, mustar: Vec<Vector>) -> Result<Self> {
        if xstar.len() < 3 {
            return Err(Error::InvalidProblem(format!(
                "dual variables need at least 3 x* entries, got {}",
                xstar.len()
            )));
        }
        check_dim("mu* sequence length", xstar.len() - 1, mustar.len())?;
        let n = xstar[0].len();
        for v in xstar.iter().chain(&mustar) {
            check_dim("dual variable", n, v.len())?;
        }
        Ok(DualVariables { xstar, mustar })
    }

    pub fn zeros(n: usize, horizon: usize) -> Self {
        DualVariables {
            xstar: vec![Vector::zeros(n); horizon + 1],
            mustar: vec![Vector::zeros(n); horizon],
        }
    }

    /// The point of the adjoint subspace generated by the seed
    /// `(x*_{N−1}, x*_N)`: `x*_t = A0ᵀx*_{t+2} + A1ᵀx*_{t+1}`,
    /// `μ*_{t+1} = A1ᵀx*_{t+2}`, `μ*_0 = x*_0 − A0ᵀx*_2`.
    pub fn from_seed(
        map: &SemilinearMap,
        horizon: usize,
        seed_nm1: &Vector,
        seed_n: &Vector,
    ) -> Result<Self> {
        let xstar =
            crate::solvers::adjoint_recursion(map.a0(), map.a1(), seed_nm1, seed_n, horizon)?;
        let a0t = map.a0().transpose();
        let a1t = map.a1().transpose();
        let mut mustar = Vec::with_capacity(horizon);
        mustar.push(&xstar[0] - &a0t * &xstar[2]);
        for t in 0..horizon - 1 {
            mustar.push(&a1t * &xstar[t + 2]);
        }
        Ok(DualVariables { xstar, mustar })
    }

    pub fn horizon(&self) -> usize {
        self.xstar.len() - 1
    }

    pub fn state_dim(&self) -> usize {
        self.xstar[0].len()
    }

    fn check_for(&self, p: &DiscreteProblem) -> Result<()> {
        check_dim("x* sequence length", p.horizon() + 1, self.xstar.len())?;
        check_dim("mu* sequence length", p.horizon(), self.mustar.len())?;
        check_dim("dual variable", p.state_dim(), self.state_dim())
    }
}

/// The dual objective at arbitrary dual variables; `−∞` as soon as the
/// conjugate term or any `M`-term is `−∞`.
pub fn dual_objective(p: &DiscreteProblem, dv: &DualVariables) -> Result<ExtReal> {
    dv.check_for(p)?;
    let n_steps = p.horizon();
    let (x, mu) = (&dv.xstar, &dv.mustar);
    let terminal_arg = stack(&[&(&mu[n_steps - 1] - &x[n_steps - 1]), &(-&x[n_steps])]);
    let terminal = -p.phi().conjugate(&terminal_arg)?;
    if terminal.is_neg_inf() {
        return Ok(ExtReal::NegInf);
    }
    let mut terms = Vec::with_capacity(n_steps + 2);
    terms.push(terminal);
    for t in 0..n_steps - 1 {
        let m = p
            .map()
            .m_function(&(&x[t] - &mu[t]), &mu[t + 1], &x[t + 2])?;
        if m.is_neg_inf() {
            return Ok(ExtReal::NegInf);
        }
        terms.push(m);
    }
    terms.push(ExtReal::new(-p.q0().support(&(&x[0] - &mu[0]))?));
    terms.push(ExtReal::new(-p.q1().support(&x[1])?));
    ExtReal::checked_sum(terms)
}

/// `primal value − dual objective`; nonnegative up to rounding.
pub fn weak_duality_gap(
    p: &DiscreteProblem,
    ps: &PrimalSolution,
    dv: &DualVariables,
) -> Result<ExtReal> {
    let dual = dual_objective(p, dv)?;
    ps.value.checked_sub(dual)
}

/// Residuals of the optimality conditions at a primal/dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Per step `t`: `(‖x*_t − μ*_t − A0ᵀx*_{t+2}‖, ‖μ*_{t+1} − A1ᵀx*_{t+2}‖)`.
    pub el_residuals: Vec<(f64, f64)>,
    /// Per step `t`: `H_F(x̃_t, x̃_{t+1}, x*_{t+2}) − ⟨x̃_{t+2}, x*_{t+2}⟩`.
    pub argmax_residuals: Vec<f64>,
    pub trans0: f64,
    pub trans1: f64,
    pub fenchel_terminal: f64,
    pub primal_value: ExtReal,
    pub dual_value: ExtReal,
    pub gap: ExtReal,
    pub tol: f64,
}

impl CertificateReport {
    pub fn el_residual_max(&self) -> f64 {
        self.el_residuals
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.argmax_residuals.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn trans_residual_max(&self) -> f64 {
        self.trans0.max(self.trans1)
    }

    pub fn max_residual(&self) -> f64 {
        self.el_residual_max()
            .max(self.trans_residual_max())
            .max(self.fenchel_terminal)
    }

    /// Residual threshold `tol·(1 + |primal value|)`.
    pub fn threshold(&self) -> f64 {
        self.tol * (1.0 + self.primal_value.finite().map_or(0.0, f64::abs))
    }

    pub fn passed(&self) -> bool {
        self.primal_value.is_finite() && self.max_residual() <= self.threshold()
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "certificate: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        for (t, ((a, b), h)) in self
            .el_residuals
            .iter()
            .zip(&self.argmax_residuals)
            .enumerate()
        {
            writeln!(f, "  t={t}: el=({a:.3e}, {b:.3e}) argmax={h:.3e}")?;
        }
        writeln!(
            f,
            "  transversality: Q0={:.3e} Q1={:.3e}",
            self.trans0 + 0.0,
            self.trans1 + 0.0
        )?;
        writeln!(f, "  terminal fenchel: {:.3e}", self.fenchel_terminal)?;
        writeln!(
            f,
            "  primal={} dual={} gap={}",
            self.primal_value, self.dual_value, self.gap
        )?;
        write!(f, "  threshold: {:.3e}", self.threshold())
    }
}

/// Checks the Euler–Lagrange conditions (through matrix adjoints), the
/// argmaximum condition, support attainment at `t = 0, 1`, and the terminal
/// Fenchel equality at a feasible primal trajectory.
pub fn certify(
    p: &DiscreteProblem,
    ps: &PrimalSolution,
    dv: &DualVariables,
    tol: f64,
) -> Result<CertificateReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    let map = p.semilinear()?;
    dv.check_for(p)?;
    let traj = ps
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::Infeasible("primal solution has no trajectory".into()))?;
    let violation = p.feasibility_violation(traj)?;
    if violation > PRIMAL_FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "primal trajectory violates its constraints by {violation:e}"
        )));
    }
    let n_steps = p.horizon();
    let xs = &traj.states;
    let (x, mu) = (&dv.xstar, &dv.mustar);
    let a0t = map.a0().transpose();
    let a1t = map.a1().transpose();

    let mut el_residuals = Vec::with_capacity(n_steps - 1);
    let mut argmax_residuals = Vec::with_capacity(n_steps - 1);
    for t in 0..n_steps - 1 {
        let r0 = (&x[t] - &mu[t] - &a0t * &x[t + 2]).norm();
        let r1 = (&mu[t + 1] - &a1t * &x[t + 2]).norm();
        el_residuals.push((r0, r1));
        let h = p.map().hamiltonian(&xs[t], &xs[t + 1], &x[t + 2])?.to_f64();
        argmax_residuals.push((h - xs[t + 2].dot(&x[t + 2])).max(0.0));
    }
    let trans0 = support_attainment_residual(p.q0(), &xs[0], &(&x[0] - &mu[0]))?;
    let trans1 = support_attainment_residual(p.q1(), &xs[1], &x[1])?;
    let terminal_point = stack(&[&xs[n_steps - 1], &xs[n_steps]]);
    let terminal_dir = stack(&[&(&mu[n_steps - 1] - &x[n_steps - 1]), &(-&x[n_steps])]);
    let fenchel_terminal = fenchel_residual(p.phi(), &terminal_point, &terminal_dir)?
        .to_f64()
        .max(0.0);

    let primal_value = ps.value;
    let dual_value = dual_objective(p, dv)?;
    let gap = primal_value.checked_sub(dual_value)?;
    Ok(CertificateReport {
        el_residuals,
        argmax_residuals,
        trans0,
        trans1,
        fenchel_terminal,
        primal_value,
        dual_value,
        gap,
        tol,
    })
}

/// Outcome of one nondegeneracy check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Pass => "PASS",
            Check::Warn => "WARN",
            Check::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeItem {
    pub name: &'static str,
    pub status: Check,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    pub items: Vec<ProbeItem>,
}

impl NondegeneracyReport {
    /// Worst status over all items.
    pub fn overall(&self) -> Check {
        self.items
            .iter()
            .map(|i| i.status)
            .max()
            .unwrap_or(Check::Pass)
    }

    pub fn item(&self, name: &str) -> Option<&ProbeItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

impl fmt::Display for NondegeneracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{:<12} {}  {}", item.name, item.status, item.detail)?;
        }
        write!(f, "overall: {}", self.overall())
    }
}

/// Interior checks: `int gph F ≠ ∅` (U with interior and `B` of full row
/// rank) and interiors of `Q0`, `Q1`. Singletons give WARN because only the
/// relative-interior form of the condition could still hold.
pub fn nondegeneracy_probe(p: &DiscreteProblem) -> Result<NondegeneracyReport> {
    let map = p.semilinear()?;
    let n = map.state_dim();
    let rank = matrix_rank(map.b());
    let mut items = Vec::with_capacity(3);
    let graph = if rank < n {
        ProbeItem {
            name: "graph",
            status: Check::Fail,
            detail: format!("B has rank {rank} < {n}; int gph F is empty"),
        }
    } else if !map.control_set().has_interior() {
        ProbeItem {
            name: "graph",
            status: if is_singleton(map.control_set()) {
                Check::Warn
            } else {
                Check::Fail
            },
            detail: "U has empty interior".into(),
        }
    } else {
        ProbeItem {
            name: "graph",
            status: Check::Pass,
            detail: "U has interior and B has full row rank".into(),
        }
    };
    items.push(graph);
    for (name, set) in [("Q0", p.q0()), ("Q1", p.q1())] {
        items.push(if set.has_interior() {
            ProbeItem {
                name,
                status: Check::Pass,
                detail: "nonempty interior".into(),
            }
        } else if is_singleton(set) {
            ProbeItem {
                name,
                status: Check::Warn,
                detail: "singleton has empty interior; relative-interior case not decided".into(),
            }
        } else {
            ProbeItem {
                name,
                status: Check::Warn,
                detail: "empty interior; relative-interior case not decided".into(),
            }
        });
    }
    Ok(NondegeneracyReport { items })
}

fn is_singleton(s: &crate::convex::ConvexSet) -> bool {
    s.diameter() == 0.0
}

fn matrix_rank(m: &crate::Matrix) -> usize {
    m.rank(1e-10 * m.amax().max(f64::MIN_POSITIVE))
}
