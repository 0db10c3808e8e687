//! Mesh discretization of `x″ ∈ F(x, x′)` and the transforms connecting the
//! dual of the mesh problem with difference-derivative expressions.
//!
//! On a mesh of step `δ = 1/K` the inclusion becomes
//! `x(t + 2δ) ∈ G(x(t), x(t + δ))` with `G(x, y) = 2y − x + δ²F(x, (y − x)/δ)`.
//! Grid functions are stored by index: entry `k` is the value at `t = kδ`.

use crate::convex::{ConvexFn, ConvexSet, ExtReal};
use crate::error::{check_dim, Error, Result};
use crate::inclusion::{DiscreteProblem, GraphTriple, InclusionMap, SemilinearMap, TabulatedMap};
use crate::{stack, Matrix, Vector};

/// Largest order accepted by [`PascalTransform`].
pub const MAX_PASCAL_ORDER: usize = 20;

const MAX_DENOMINATOR: u64 = 1_000_000;

/// Continuous data: `x″ = A0x + A1x′ + Bu`, `u ∈ U`, terminal cost
/// `φ(x(1), x′(1))`, `x(0) ∈ Q0`, `x′(0) ∈ Q1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousProblem {
    map: SemilinearMap,
    phi: ConvexFn,
    q0: ConvexSet,
    q1: ConvexSet,
}

impl ContinuousProblem {
    pub fn new(map: SemilinearMap, phi: ConvexFn, q0: ConvexSet, q1: ConvexSet) -> Result<Self> {
        let n = map.state_dim();
        check_dim("terminal cost", 2 * n, phi.dim())?;
        check_dim("Q0", n, q0.dim())?;
        check_dim("Q1", n, q1.dim())?;
        if phi.is_sampled() {
            return Err(Error::InvalidProblem(
                "terminal cost must have a closed-form conjugate".into(),
            ));
        }
        Ok(ContinuousProblem { map, phi, q0, q1 })
    }

    pub fn map(&self) -> &SemilinearMap {
        &self.map
    }
    pub fn phi(&self) -> &ConvexFn {
        &self.phi
    }
    pub fn q0(&self) -> &ConvexSet {
        &self.q0
    }
    pub fn q1(&self) -> &ConvexSet {
        &self.q1
    }
    pub fn state_dim(&self) -> usize {
        self.map.state_dim()
    }
}

/// Uniform mesh `{0, δ, …, 1}` with `δ = 1/K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshSpec {
    steps: usize,
}

impl MeshSpec {
    pub fn from_steps(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidMesh(format!(
                "mesh needs at least 2 steps (delta <= 1/2), got {steps}"
            )));
        }
        Ok(MeshSpec { steps })
    }

    /// Recovers `K` from a decimal step; the step must be a unit fraction.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidMesh(format!(
                "delta must lie in (0, 1/2], got {delta}"
            )));
        }
        let (num, den) = rational_approx(delta)
            .ok_or_else(|| Error::InvalidMesh(format!("delta must be 1/K, got {delta}")))?;
        if num != 1 {
            return Err(Error::InvalidMesh(format!(
                "delta must be 1/K, got {delta} = {num}/{den}"
            )));
        }
        Self::from_steps(den as usize)
    }

    /// `K = 1/δ`, which is also the horizon of the mesh problem.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.delta()).collect()
    }
}

/// Continued-fraction recovery of `p/q ≈ x` with `q ≤ 10⁶`.
fn rational_approx(x: f64) -> Option<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > MAX_DENOMINATOR as f64 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > MAX_DENOMINATOR {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p1 as f64 / q1 as f64).abs() <= 4.0 * f64::EPSILON * x.max(1e-300) {
            return Some((p1, q1));
        }
        let frac = r - a as f64;
        if frac <= 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Forward difference `Δx(k) = [x(k+1) − x(k)]/δ`.
pub fn forward_diff(x: &[Vector], k: usize, delta: f64) -> Vector {
    (&x[k + 1] - &x[k]) / delta
}

/// Backward difference `Δ₋x(k) = [x(k) − x(k−1)]/δ`.
pub fn backward_diff(x: &[Vector], k: usize, delta: f64) -> Vector {
    (&x[k] - &x[k - 1]) / delta
}

/// Second difference `Δ²x(k) = [Δx(k+1) − Δx(k)]/δ`.
pub fn second_diff(x: &[Vector], k: usize, delta: f64) -> Vector {
    (forward_diff(x, k + 1, delta) - forward_diff(x, k, delta)) / delta
}

/// The mesh map `G(x, y) = 2y − x + δ²F(x, (y − x)/δ)`.
pub fn g_map(f: &InclusionMap, delta: f64) -> Result<InclusionMap> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidMesh(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    match f {
        InclusionMap::Semilinear(m) => {
            let n = m.state_dim();
            let e = Matrix::identity(n, n);
            let a0 = -&e + m.a0() * (delta * delta) - m.a1() * delta;
            let a1 = e * 2.0 + m.a1() * delta;
            let b = m.b() * (delta * delta);
            Ok(SemilinearMap::new(a0, a1, b, m.control_set().clone())?.into())
        }
        InclusionMap::Tabulated(m) => {
            let triples = m
                .triples()
                .iter()
                .map(|t| {
                    let y = &t.x + &t.y * delta;
                    let z = &y * 2.0 - &t.x + &t.z * (delta * delta);
                    GraphTriple {
                        x: t.x.clone(),
                        y,
                        z,
                    }
                })
                .collect();
            Ok(TabulatedMap::new(triples)?.into())
        }
    }
}

/// `M_G(x*, y*, z*) = δ²·M_F((x* + y* − z*)/δ², (y* − 2z*)/δ, z*)`.
pub fn m_g_via_formula(
    f: &InclusionMap,
    delta: f64,
    xstar: &Vector,
    ystar: &Vector,
    zstar: &Vector,
) -> Result<ExtReal> {
    let d2 = delta * delta;
    let a = (xstar + ystar - zstar) / d2;
    let b = (ystar - zstar * 2.0) / delta;
    Ok(f.m_function(&a, &b, zstar)?.scale(d2))
}

/// `Φ*(x*, y*) = φ*(x* + y*, δy*)` for the lift `Φ(x, y) = φ(x, (y − x)/δ)`.
pub fn phi_lift_conjugate(
    phi: &ConvexFn,
    delta: f64,
    xstar: &Vector,
    ystar: &Vector,
) -> Result<ExtReal> {
    check_dim("lift argument", phi.dim(), xstar.len() + ystar.len())?;
    phi.conjugate(&stack(&[&(xstar + ystar), &(ystar * delta)]))
}

/// Upper-triangular matrix `T[j][i] = C(i, j)·δʲ` acting blockwise on
/// `(y₀*, …, y_m*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PascalTransform {
    order: usize,
    delta: f64,
    matrix: Matrix,
}

impl PascalTransform {
    pub fn new(order: usize, delta: f64) -> Result<Self> {
        if order == 0 || order > MAX_PASCAL_ORDER {
            return Err(Error::InvalidMesh(format!(
                "Pascal order must be in 1..={MAX_PASCAL_ORDER}, got {order}"
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        let binom = binomials(order);
        let matrix = Matrix::from_fn(order + 1, order + 1, |j, i| {
            if i >= j {
                binom[i][j] as f64 * delta.powi(j as i32)
            } else {
                0.0
            }
        });
        Ok(PascalTransform {
            order,
            delta,
            matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, ystars: &[Vector]) -> Result<Vec<Vector>> {
        check_dim("Pascal arguments", self.order + 1, ystars.len())?;
        let n = ystars[0].len();
        for y in ystars {
            check_dim("Pascal argument", n, y.len())?;
        }
        Ok((0..=self.order)
            .map(|j| {
                let mut out = Vector::zeros(n);
                for (i, y) in ystars.iter().enumerate().skip(j) {
                    out += y * self.matrix[(j, i)];
                }
                out
            })
            .collect())
    }
}

/// Exact binomial rows `0..=m` as integers.
fn binomials(m: usize) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = vec![vec![1]];
    for i in 1..=m {
        let prev = &rows[i - 1];
        let mut row = vec![1u64; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// Conjugate arguments of the order-`m` lift: `out_j = δʲ Σ_{i≥j} C(i, j)·y_i*`.
pub fn pascal_args(order: usize, delta: f64, ystars: &[Vector]) -> Result<Vec<Vector>> {
    PascalTransform::new(order, delta)?.apply(ystars)
}

/// Which scaling a set of grid dual functions uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridForm {
    /// Dual variables of the mesh problem itself: `x̄*`, `μ̄*`.
    Barred,
    /// `x* = δx̄*`, `μ* = δμ̄*`, together with `v*`.
    Scaled,
}

/// Grid dual functions: `xstar` on `{0, …, 1}` (`K + 1` entries), `mustar`
/// and, in scaled form, `vstar` on `{0, …, 1 − δ}` (`K` entries each).
#[derive(Debug, Clone, PartialEq)]
pub struct GridDualVars {
    pub form: GridForm,
    pub xstar: Vec<Vector>,
    pub mustar: Vec<Vector>,
    pub vstar: Vec<Vector>,
}

impl GridDualVars {
    pub fn barred(mesh: MeshSpec, xstar: Vec<Vector>, mustar: Vec<Vector>) -> Result<Self> {
        let gv = GridDualVars {
            form: GridForm::Barred,
            xstar,
            mustar,
            vstar: Vec::new(),
        };
        gv.validate(mesh)?;
        Ok(gv)
    }

    /// Scaled variables from `x*` and `v*`; `μ*(t) = δv*(t) + 2x*(t + δ)`.
    pub fn scaled(mesh: MeshSpec, xstar: Vec<Vector>, vstar: Vec<Vector>) -> Result<Self> {
        check_dim("x* grid length", mesh.steps() + 1, xstar.len())?;
        check_dim("v* grid length", mesh.steps(), vstar.len())?;
        let delta = mesh.delta();
        let mustar = vstar
            .iter()
            .enumerate()
            .map(|(k, v)| v * delta + &xstar[k + 1] * 2.0)
            .collect();
        let gv = GridDualVars {
            form: GridForm::Scaled,
            xstar,
            mustar,
            vstar,
        };
        gv.validate(mesh)?;
        Ok(gv)
    }

    pub fn validate(&self, mesh: MeshSpec) -> Result<()> {
        let k = mesh.steps();
        check_dim("x* grid length", k + 1, self.xstar.len())?;
        check_dim("mu* grid length", k, self.mustar.len())?;
        match self.form {
            GridForm::Barred if !self.vstar.is_empty() => {
                return Err(Error::InvalidMesh(
                    "barred grid variables carry no v*".into(),
                ))
            }
            GridForm::Scaled => check_dim("v* grid length", k, self.vstar.len())?,
            _ => {}
        }
        let n = self.xstar[0].len();
        for v in self.xstar.iter().chain(&self.mustar).chain(&self.vstar) {
            check_dim("grid value", n, v.len())?;
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.xstar[0].len()
    }

    fn require(&self, form: GridForm) -> Result<()> {
        if self.form != form {
            return Err(Error::InvalidMesh(format!(
                "expected {form:?} grid dual variables"
            )));
        }
        Ok(())
    }
}

/// Barred to scaled form: `x* = δx̄*`, `μ* = δμ̄*`,
/// `v*(t) = [μ*(t) − 2x*(t + δ)]/δ`.
pub fn dual_bridge(barred: &GridDualVars, mesh: MeshSpec) -> Result<GridDualVars> {
    barred.require(GridForm::Barred)?;
    barred.validate(mesh)?;
    let delta = mesh.delta();
    let xstar: Vec<Vector> = barred.xstar.iter().map(|x| x * delta).collect();
    let mustar: Vec<Vector> = barred.mustar.iter().map(|m| m * delta).collect();
    let vstar = mustar
        .iter()
        .enumerate()
        .map(|(k, m)| (m - &xstar[k + 1] * 2.0) / delta)
        .collect();
    Ok(GridDualVars {
        form: GridForm::Scaled,
        xstar,
        mustar,
        vstar,
    })
}

/// Scaled to barred form (inverse of [`dual_bridge`]).
pub fn to_barred(scaled: &GridDualVars, mesh: MeshSpec) -> Result<GridDualVars> {
    scaled.require(GridForm::Scaled)?;
    scaled.validate(mesh)?;
    let delta = mesh.delta();
    GridDualVars::barred(
        mesh,
        scaled.xstar.iter().map(|x| x / delta).collect(),
        scaled.mustar.iter().map(|m| m / delta).collect(),
    )
}

/// Mesh-problem `M`-term `M_G(x̄*(t) − μ̄*(t), μ̄*(t+δ), x̄*(t+2δ))` at `t = kδ`,
/// evaluated on the map `G` itself.
pub fn m_term_mesh(
    f: &InclusionMap,
    mesh: MeshSpec,
    barred: &GridDualVars,
    k: usize,
) -> Result<ExtReal> {
    barred.require(GridForm::Barred)?;
    check_index(mesh, k)?;
    let g = g_map(f, mesh.delta())?;
    g.m_function(
        &(&barred.xstar[k] - &barred.mustar[k]),
        &barred.mustar[k + 1],
        &barred.xstar[k + 2],
    )
}

/// Difference form `δ·M_F(Δ²x*(t) + Δ₋v*(t+δ), v*(t+δ), x*(t+2δ))` at `t = kδ`.
pub fn m_term_difference(
    f: &InclusionMap,
    mesh: MeshSpec,
    scaled: &GridDualVars,
    k: usize,
) -> Result<ExtReal> {
    scaled.require(GridForm::Scaled)?;
    check_index(mesh, k)?;
    let delta = mesh.delta();
    let a = second_diff(&scaled.xstar, k, delta) + backward_diff(&scaled.vstar, k + 1, delta);
    Ok(
        f.m_function(&a, &scaled.vstar[k + 1], &scaled.xstar[k + 2])?
            .scale(delta),
    )
}

fn check_index(mesh: MeshSpec, k: usize) -> Result<()> {
    if k + 2 > mesh.steps() {
        return Err(Error::InvalidMesh(format!(
            "M-term index {k} outside 0..={}",
            mesh.steps() - 2
        )));
    }
    Ok(())
}

/// Terminal conjugate `Φ*(μ̄*(1−δ) − x̄*(1−δ), −x̄*(1))` computed as
/// `φ*(v*(1−δ) + Δ₋x*(1), −x*(1))`.
pub fn terminal_bridge(phi: &ConvexFn, mesh: MeshSpec, barred: &GridDualVars) -> Result<ExtReal> {
    let scaled = dual_bridge(barred, mesh)?;
    terminal_difference(phi, mesh, &scaled)
}

fn terminal_difference(phi: &ConvexFn, mesh: MeshSpec, scaled: &GridDualVars) -> Result<ExtReal> {
    let k = mesh.steps();
    let delta = mesh.delta();
    let first = &scaled.vstar[k - 1] + backward_diff(&scaled.xstar, k, delta);
    phi.conjugate(&stack(&[&first, &(-&scaled.xstar[k])]))
}

/// The same terminal conjugate evaluated directly on the lifted function.
pub fn terminal_direct(phi: &ConvexFn, mesh: MeshSpec, barred: &GridDualVars) -> Result<ExtReal> {
    barred.require(GridForm::Barred)?;
    barred.validate(mesh)?;
    let k = mesh.steps();
    let lift = ConvexFn::difference_lift(phi.clone(), mesh.delta())?;
    let a = &barred.mustar[k - 1] - &barred.xstar[k - 1];
    lift.conjugate(&stack(&[&a, &(-&barred.xstar[k])]))
}

/// `Q̂1 = Q0 + δQ1`.
pub fn first_step_set(q0: &ConvexSet, q1: &ConvexSet, mesh: MeshSpec) -> Result<ConvexSet> {
    q0.minkowski_sum(&q1.scaled(mesh.delta())?)
}

/// Returns `(lhs, rhs)` with
/// `lhs = W_Q0(x̄*(0) − μ̄*(0)) + W_Q̂1(x̄*(δ))` and
/// `rhs = W_Q0(−v*(0) − Δx*(0)) + W_Q1(x*(δ))`; always `lhs ≥ rhs`.
pub fn support_bridge_check(
    q0: &ConvexSet,
    q1: &ConvexSet,
    mesh: MeshSpec,
    barred: &GridDualVars,
) -> Result<(f64, f64)> {
    let scaled = dual_bridge(barred, mesh)?;
    let q1_hat = first_step_set(q0, q1, mesh)?;
    let lhs =
        q0.support(&(&barred.xstar[0] - &barred.mustar[0]))? + q1_hat.support(&barred.xstar[1])?;
    let rhs = support_terms_difference(q0, q1, mesh, &scaled)?;
    Ok((lhs, rhs))
}

fn support_terms_difference(
    q0: &ConvexSet,
    q1: &ConvexSet,
    mesh: MeshSpec,
    scaled: &GridDualVars,
) -> Result<f64> {
    let d0 = -&scaled.vstar[0] - forward_diff(&scaled.xstar, 0, mesh.delta());
    Ok(q0.support(&d0)? + q1.support(&scaled.xstar[1])?)
}

/// Difference-derivative dual objective of the mesh problem:
///
/// ```text
/// −φ*(v*(1−δ) + Δ₋x*(1), −x*(1))
///   + Σ_{t = 0, δ, …, 1−2δ} δ·M_F(Δ²x*(t) + Δ₋v*(t+δ), v*(t+δ), x*(t+2δ))
///   − W_Q0(−v*(0) − Δx*(0)) − W_Q1(x*(δ))
/// ```
pub fn dual_objective_da(
    cp: &ContinuousProblem,
    mesh: MeshSpec,
    gv: &GridDualVars,
) -> Result<ExtReal> {
    gv.require(GridForm::Scaled)?;
    gv.validate(mesh)?;
    check_dim("grid dual variables", cp.state_dim(), gv.state_dim())?;
    let f: InclusionMap = cp.map.clone().into();
    let terminal = -terminal_difference(&cp.phi, mesh, gv)?;
    if terminal.is_neg_inf() {
        return Ok(ExtReal::NegInf);
    }
    let mut terms = vec![terminal];
    for k in 0..mesh.steps() - 1 {
        let m = m_term_difference(&f, mesh, gv, k)?;
        if m.is_neg_inf() {
            return Ok(ExtReal::NegInf);
        }
        terms.push(m);
    }
    terms.push(ExtReal::new(-support_terms_difference(
        &cp.q0, &cp.q1, mesh, gv,
    )?));
    ExtReal::checked_sum(terms)
}

/// The mesh problem: horizon `K`, map `G`, terminal cost
/// `Φ(x, y) = φ(x, (y − x)/δ)`, initial sets `Q0` and `Q̂1 = Q0 + δQ1`.
pub fn build_pda(cp: &ContinuousProblem, mesh: MeshSpec) -> Result<DiscreteProblem> {
    let delta = mesh.delta();
    let map = g_map(&cp.map.clone().into(), delta)?;
    let phi = ConvexFn::difference_lift(cp.phi.clone(), delta)?;
    let q1_hat = first_step_set(&cp.q0, &cp.q1, mesh)?;
    DiscreteProblem::new(mesh.steps(), map, phi, cp.q0.clone(), q1_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::SetKind;

    fn s(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    fn sv(xs: &[f64]) -> Vec<Vector> {
        xs.iter().map(|&x| s(x)).collect()
    }

    fn semilinear(a0: f64, a1: f64, b: f64) -> InclusionMap {
        SemilinearMap::scalar(a0, a1, b, ConvexSet::interval(-1.0, 1.0).unwrap())
            .unwrap()
            .into()
    }

    fn double_integrator() -> ContinuousProblem {
        let zero = ConvexSet::singleton(s(0.0)).unwrap();
        ContinuousProblem::new(
            SemilinearMap::scalar(0.0, 0.0, 1.0, ConvexSet::interval(-1.0, 1.0).unwrap()).unwrap(),
            ConvexFn::coordinate_select(2, vec![0]).unwrap(),
            zero.clone(),
            zero,
        )
        .unwrap()
    }

    #[test]
    fn mesh_from_delta() {
        assert_eq!(MeshSpec::from_delta(0.125).unwrap().steps(), 8);
        assert_eq!(MeshSpec::from_delta(1.0 / 3.0).unwrap().steps(), 3);
        assert_eq!(MeshSpec::from_delta(0.5).unwrap().steps(), 2);
        let err = MeshSpec::from_delta(0.3).unwrap_err();
        assert!(err.to_string().contains("delta must be 1/K"), "{err}");
        assert!(MeshSpec::from_delta(1.0).is_err());
        assert!(MeshSpec::from_delta(0.0).is_err());
        assert!(MeshSpec::from_delta(0.333).is_err());
    }

    #[test]
    fn g_map_examples() {
        let g = g_map(&semilinear(0.0, 0.0, 1.0), 0.5).unwrap();
        let g = g.as_semilinear().unwrap();
        assert_eq!((g.a0()[0], g.a1()[0], g.b()[0]), (-1.0, 2.0, 0.25));

        let g = g_map(&semilinear(1.0, 1.0, 1.0), 1.0).unwrap();
        let g = g.as_semilinear().unwrap();
        assert_eq!((g.a0()[0], g.a1()[0], g.b()[0]), (-1.0, 3.0, 1.0));

        let tab: InclusionMap = TabulatedMap::scalar(&[(1.0, 1.0, 1.0)]).unwrap().into();
        let InclusionMap::Tabulated(g) = g_map(&tab, 1.0).unwrap() else {
            panic!("expected tabulated map");
        };
        let t = &g.triples()[0];
        assert_eq!((t.x[0], t.y[0], t.z[0]), (1.0, 2.0, 4.0));
    }

    #[test]
    fn m_g_formula_examples() {
        let tab: InclusionMap =
            TabulatedMap::scalar(&[(0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)])
                .unwrap()
                .into();
        let g = g_map(&tab, 1.0).unwrap();
        let direct = g.m_function(&s(1.0), &s(1.0), &s(1.0)).unwrap();
        let formula = m_g_via_formula(&tab, 1.0, &s(1.0), &s(1.0), &s(1.0)).unwrap();
        assert_eq!(direct, -1.0);
        assert_eq!(formula, -1.0);
        assert_eq!(
            m_g_via_formula(&tab, 0.5, &s(0.0), &s(0.0), &s(0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn phi_lift_examples() {
        let half = ConvexFn::norm2sq(2);
        assert_eq!(
            phi_lift_conjugate(&half, 1.0, &s(1.0), &s(1.0)).unwrap(),
            2.5
        );
        let second = ConvexFn::coordinate_select(2, vec![1]).unwrap();
        assert_eq!(
            phi_lift_conjugate(&second, 0.5, &s(-2.0), &s(2.0)).unwrap(),
            0.0
        );
        assert_eq!(
            phi_lift_conjugate(&second, 0.5, &s(-1.0), &s(2.0)).unwrap(),
            ExtReal::PosInf
        );
        assert_eq!(
            phi_lift_conjugate(&half, 0.5, &s(2.0), &s(0.0)).unwrap(),
            2.0
        );
        // the composite conjugate must agree with the argument transform
        let lift = ConvexFn::difference_lift(half.clone(), 0.5).unwrap();
        let p = Vector::from_vec(vec![0.7, -1.3]);
        let direct = lift.conjugate(&p).unwrap().to_f64();
        let formula = phi_lift_conjugate(&half, 0.5, &s(0.7), &s(-1.3))
            .unwrap()
            .to_f64();
        assert!((direct - formula).abs() < 1e-12);
    }

    #[test]
    fn pascal_examples() {
        let out = pascal_args(2, 0.5, &sv(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(out, sv(&[3.0, 1.5, 0.25]));
        let out = pascal_args(1, 0.25, &sv(&[3.0, 5.0])).unwrap();
        assert_eq!(out, sv(&[8.0, 1.25]));
        let out = pascal_args(3, 1.0, &sv(&[0.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(out, sv(&[1.0, 3.0, 3.0, 1.0]));
        assert!(pascal_args(2, 0.5, &sv(&[1.0, 1.0])).is_err());
        assert!(PascalTransform::new(21, 0.5).is_err());
        let big = PascalTransform::new(20, 1.0).unwrap();
        assert_eq!(big.matrix()[(10, 20)], 184_756.0);
    }

    #[test]
    fn bridge_examples() {
        let mesh = MeshSpec::from_steps(2).unwrap();
        let barred = GridDualVars::barred(mesh, sv(&[0.0, 2.0, 0.5]), sv(&[0.0, 2.0])).unwrap();
        let scaled = dual_bridge(&barred, mesh).unwrap();
        // μ*(δ) = 1, x*(2δ) = 0.25 → v*(δ) = (1 − 0.5)/0.5
        assert_eq!(scaled.vstar[1], s(1.0));
        let back = to_barred(&scaled, mesh).unwrap();
        assert_eq!(back, barred);
    }

    #[test]
    fn terminal_bridge_routes_agree() {
        let phi = ConvexFn::norm2sq(2);
        let mesh = MeshSpec::from_steps(2).unwrap();
        let barred = GridDualVars::barred(mesh, sv(&[0.3, 0.0, -1.0]), sv(&[0.1, 0.0])).unwrap();
        let a = terminal_bridge(&phi, mesh, &barred).unwrap().to_f64();
        let b = terminal_direct(&phi, mesh, &barred).unwrap().to_f64();
        assert!((a - b).abs() < 1e-12);
        let zero = GridDualVars::barred(mesh, sv(&[0.0; 3]), sv(&[0.0; 2])).unwrap();
        assert_eq!(terminal_bridge(&phi, mesh, &zero).unwrap(), 0.0);
    }

    #[test]
    fn support_bridge_example() {
        let q = ConvexSet::interval(-1.0, 1.0).unwrap();
        let mesh = MeshSpec::from_steps(2).unwrap();
        let barred = GridDualVars::barred(mesh, sv(&[2.0, 2.0, 0.0]), sv(&[1.0, 0.0])).unwrap();
        assert_eq!(
            support_bridge_check(&q, &q, mesh, &barred).unwrap(),
            (4.0, 4.0)
        );
        let zero = GridDualVars::barred(mesh, sv(&[0.0; 3]), sv(&[0.0; 2])).unwrap();
        assert_eq!(
            support_bridge_check(&q, &q, mesh, &zero).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn build_pda_examples() {
        let cp = double_integrator();
        let p = build_pda(&cp, MeshSpec::from_steps(4).unwrap()).unwrap();
        assert_eq!(p.horizon(), 4);
        let g = p.semilinear().unwrap();
        assert_eq!((g.a0()[0], g.a1()[0], g.b()[0]), (-1.0, 2.0, 1.0 / 16.0));
        assert!(matches!(p.q1().kind(), SetKind::Singleton { .. }));

        let p = build_pda(&cp, MeshSpec::from_steps(8).unwrap()).unwrap();
        assert_eq!(p.semilinear().unwrap().b()[0], 1.0 / 64.0);

        let cp = ContinuousProblem::new(
            SemilinearMap::scalar(0.0, 0.0, 1.0, ConvexSet::interval(-1.0, 1.0).unwrap()).unwrap(),
            ConvexFn::coordinate_select(2, vec![0]).unwrap(),
            ConvexSet::interval(0.0, 1.0).unwrap(),
            ConvexSet::interval(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let p = build_pda(&cp, MeshSpec::from_steps(2).unwrap()).unwrap();
        assert_eq!(p.q1().bounding_box(), (s(-0.5), s(1.5)));
    }

    #[test]
    fn dual_objective_da_examples() {
        let cp = double_integrator();
        for k in [4usize, 8, 16] {
            let mesh = MeshSpec::from_steps(k).unwrap();
            let delta = mesh.delta();
            let xs: Vec<Vector> = mesh.times().iter().map(|t| s(t - 1.0)).collect();
            let gv = GridDualVars::scaled(mesh, xs.clone(), sv(&vec![0.0; k])).unwrap();
            let val = dual_objective_da(&cp, mesh, &gv).unwrap().to_f64();
            let closed = -(1.0 - delta) * (1.0 - 2.0 * delta) / 2.0;
            let direct: f64 = -(0..k - 1)
                .map(|j| delta * ((j + 2) as f64 * delta - 1.0).abs())
                .sum::<f64>();
            assert!((val - closed).abs() < 1e-12, "K={k}: {val} vs {closed}");
            assert!((val - direct).abs() < 1e-12);

            let mut vs = vec![0.0; k];
            vs[0] = 1.0;
            let gv = GridDualVars::scaled(mesh, xs, sv(&vs)).unwrap();
            assert_eq!(dual_objective_da(&cp, mesh, &gv).unwrap(), ExtReal::NegInf);
        }
        let mesh = MeshSpec::from_steps(4).unwrap();
        let zero = GridDualVars::scaled(mesh, sv(&[0.0; 5]), sv(&[0.0; 4])).unwrap();
        assert_eq!(
            dual_objective_da(&cp, mesh, &zero).unwrap(),
            ExtReal::NegInf
        );
    }

    #[test]
    fn lemma_m_term_routes_agree() {
        let f = semilinear(0.7, -0.4, 1.3);
        let mesh = MeshSpec::from_steps(4).unwrap();
        // x̄* follows the mesh adjoint recursion so the M-terms are finite
        let g = g_map(&f, mesh.delta()).unwrap();
        let gm = g.as_semilinear().unwrap();
        let (a0, a1) = (gm.a0()[0], gm.a1()[0]);
        let mut x = vec![0.0; 5];
        x[4] = 0.8;
        x[3] = -0.3;
        for t in (0..3).rev() {
            x[t] = a0 * x[t + 2] + a1 * x[t + 1];
        }
        let mut mu = vec![0.0; 4];
        for t in 0..3 {
            mu[t + 1] = a1 * x[t + 2];
        }
        mu[0] = x[0] - a0 * x[2];
        let barred = GridDualVars::barred(mesh, sv(&x), sv(&mu)).unwrap();
        let scaled = dual_bridge(&barred, mesh).unwrap();
        for k in 0..3 {
            let lhs = m_term_mesh(&f, mesh, &barred, k).unwrap().to_f64();
            let rhs = m_term_difference(&f, mesh, &scaled, k).unwrap().to_f64();
            assert!(lhs.is_finite());
            assert!((lhs - rhs).abs() < 1e-9, "k={k}: {lhs} vs {rhs}");
        }
    }
}
