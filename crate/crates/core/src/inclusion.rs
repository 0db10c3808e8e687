//! Set-valued maps `F(x, y)` and the primal second-order discrete problem
//!
//! ```text
//! minimize φ(x_{N−1}, x_N)  s.t.  x_{t+2} ∈ F(x_t, x_{t+1}),  x_0 ∈ Q0,  x_1 ∈ Q1.
//! ```

use crate::convex::{ConvexFn, ConvexSet, ExtReal, MEMBERSHIP_TOL};
use crate::error::{check_dim, Error, Result};
use crate::{stack, Matrix, Vector};

/// Absolute tolerance for matching `(x, y)` against tabulated graph triples.
pub const TABLE_TOL: f64 = 1e-9;

/// Relative tolerance of the adjoint feasibility test inside the semilinear
/// `M`-function (`x* = A0ᵀz*`, `y* = A1ᵀz*`).
pub const ADJOINT_TOL: f64 = 1e-9;

/// `F(x, y) = A0·x + A1·y + B·U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearMap {
    a0: Matrix,
    a1: Matrix,
    b: Matrix,
    u: ConvexSet,
}

impl SemilinearMap {
    pub fn new(a0: Matrix, a1: Matrix, b: Matrix, u: ConvexSet) -> Result<Self> {
        let n = a0.nrows();
        if n == 0 || !a0.is_square() {
            return Err(Error::InvalidMap(
                "A0 must be a nonempty square matrix".into(),
            ));
        }
        if a1.shape() != (n, n) {
            return Err(Error::InvalidMap(format!(
                "A1 must be {n}x{n}, got {}x{}",
                a1.nrows(),
                a1.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::InvalidMap(format!(
                "B must have {n} rows and at least one column, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        check_dim("control set", b.ncols(), u.dim())?;
        if a0
            .iter()
            .chain(a1.iter())
            .chain(b.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidMap("matrix entries must be finite".into()));
        }
        Ok(SemilinearMap { a0, a1, b, u })
    }

    /// Scalar map `F(x, y) = a0·x + a1·y + b·U`.
    pub fn scalar(a0: f64, a1: f64, b: f64, u: ConvexSet) -> Result<Self> {
        let m = |v| Matrix::from_element(1, 1, v);
        Self::new(m(a0), m(a1), m(b), u)
    }

    pub fn a0(&self) -> &Matrix {
        &self.a0
    }
    pub fn a1(&self) -> &Matrix {
        &self.a1
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn control_set(&self) -> &ConvexSet {
        &self.u
    }
    pub fn state_dim(&self) -> usize {
        self.a0.nrows()
    }
    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn apply(&self, x: &Vector, y: &Vector, u: &Vector) -> Vector {
        &self.a0 * x + &self.a1 * y + &self.b * u
    }

    /// Runs `x_{t+2} = A0·x_t + A1·x_{t+1} + B·u_t` for every supplied
    /// control; each control must lie in `U` (within [`MEMBERSHIP_TOL`]).
    pub fn simulate(&self, x0: &Vector, x1: &Vector, controls: &[Vector]) -> Result<Trajectory> {
        let n = self.state_dim();
        check_dim("initial state", n, x0.len())?;
        check_dim("initial state", n, x1.len())?;
        if controls.is_empty() {
            return Err(Error::InvalidProblem(
                "simulation needs at least one control".into(),
            ));
        }
        let mut states = Vec::with_capacity(controls.len() + 2);
        states.push(x0.clone());
        states.push(x1.clone());
        for (t, u) in controls.iter().enumerate() {
            check_dim("control", self.control_dim(), u.len())?;
            let dist = self.u.distance(u)?;
            if dist > MEMBERSHIP_TOL {
                return Err(Error::Infeasible(format!(
                    "control u_{t} lies at distance {dist:e} outside U"
                )));
            }
            let next = self.apply(&states[t], &states[t + 1], u);
            states.push(next);
        }
        Ok(Trajectory {
            states,
            controls: controls.to_vec(),
        })
    }
}

/// One graph triple `(x, y, z)` with `z ∈ F(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTriple {
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
}

/// A set-valued map given by a finite list of graph triples. Convexity is not
/// enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMap {
    triples: Vec<GraphTriple>,
}

impl TabulatedMap {
    pub fn new(triples: Vec<GraphTriple>) -> Result<Self> {
        let first = triples
            .first()
            .ok_or_else(|| Error::InvalidMap("tabulated map needs at least one triple".into()))?;
        let n = first.x.len();
        if n == 0 {
            return Err(Error::InvalidMap(
                "triples must have positive dimension".into(),
            ));
        }
        for t in &triples {
            check_dim("graph triple", n, t.x.len())?;
            check_dim("graph triple", n, t.y.len())?;
            check_dim("graph triple", n, t.z.len())?;
        }
        Ok(TabulatedMap { triples })
    }

    /// Convenience constructor for scalar triples.
    pub fn scalar(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let one = |v| Vector::from_element(1, v);
        Self::new(
            triples
                .iter()
                .map(|&(x, y, z)| GraphTriple {
                    x: one(x),
                    y: one(y),
                    z: one(z),
                })
                .collect(),
        )
    }

    pub fn triples(&self) -> &[GraphTriple] {
        &self.triples
    }

    pub fn state_dim(&self) -> usize {
        self.triples[0].x.len()
    }

    /// Triples whose `(x, y)` matches the query within [`TABLE_TOL`].
    pub fn image<'a>(
        &'a self,
        x: &'a Vector,
        y: &'a Vector,
    ) -> impl Iterator<Item = &'a Vector> + 'a {
        self.triples
            .iter()
            .filter(move |t| (&t.x - x).amax() <= TABLE_TOL && (&t.y - y).amax() <= TABLE_TOL)
            .map(|t| &t.z)
    }
}

/// The time-invariant set-valued map of a discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionMap {
    Semilinear(SemilinearMap),
    Tabulated(TabulatedMap),
}

impl From<SemilinearMap> for InclusionMap {
    fn from(m: SemilinearMap) -> Self {
        InclusionMap::Semilinear(m)
    }
}

impl From<TabulatedMap> for InclusionMap {
    fn from(m: TabulatedMap) -> Self {
        InclusionMap::Tabulated(m)
    }
}

impl InclusionMap {
    pub fn state_dim(&self) -> usize {
        match self {
            InclusionMap::Semilinear(m) => m.state_dim(),
            InclusionMap::Tabulated(m) => m.state_dim(),
        }
    }

    pub fn as_semilinear(&self) -> Option<&SemilinearMap> {
        match self {
            InclusionMap::Semilinear(m) => Some(m),
            InclusionMap::Tabulated(_) => None,
        }
    }

    fn check3(&self, a: &Vector, b: &Vector, c: &Vector) -> Result<()> {
        let n = self.state_dim();
        check_dim("map argument", n, a.len())?;
        check_dim("map argument", n, b.len())?;
        check_dim("map argument", n, c.len())
    }

    /// Hamiltonian `H_F(x, y, z*) = sup { ⟨z, z*⟩ : z ∈ F(x, y) }`, `−∞` on an
    /// empty image.
    pub fn hamiltonian(&self, x: &Vector, y: &Vector, zstar: &Vector) -> Result<ExtReal> {
        self.check3(x, y, zstar)?;
        match self {
            InclusionMap::Semilinear(m) => {
                let drift = (&m.a0 * x + &m.a1 * y).dot(zstar);
                let w = m.u.support(&(m.b.transpose() * zstar))?;
                Ok(ExtReal::new(drift + w))
            }
            InclusionMap::Tabulated(m) => Ok(m
                .image(x, y)
                .map(|z| ExtReal::new(z.dot(zstar)))
                .fold(ExtReal::NegInf, ExtReal::max)),
        }
    }

    /// `M_F(x*, y*, z*) = inf { ⟨x, x*⟩ + ⟨y, y*⟩ − ⟨z, z*⟩ : (x, y, z) ∈ gph F }`.
    ///
    /// For semilinear maps this is `−W_U(Bᵀz*)` on the subspace
    /// `x* = A0ᵀz*, y* = A1ᵀz*` and `−∞` off it.
    pub fn m_function(&self, xstar: &Vector, ystar: &Vector, zstar: &Vector) -> Result<ExtReal> {
        self.check3(xstar, ystar, zstar)?;
        match self {
            InclusionMap::Semilinear(m) => {
                let ax = m.a0.transpose() * zstar;
                let ay = m.a1.transpose() * zstar;
                if !adjoint_match(xstar, &ax) || !adjoint_match(ystar, &ay) {
                    return Ok(ExtReal::NegInf);
                }
                Ok(ExtReal::new(-m.u.support(&(m.b.transpose() * zstar))?))
            }
            InclusionMap::Tabulated(m) => Ok(m
                .triples
                .iter()
                .map(|t| ExtReal::new(t.x.dot(xstar) + t.y.dot(ystar) - t.z.dot(zstar)))
                .fold(ExtReal::PosInf, ExtReal::min)),
        }
    }

    /// An element `z` of the argmaximum set `{z ∈ F(x, y) : ⟨z, z*⟩ = H_F(x, y, z*)}`.
    pub fn argmax_rep(&self, x: &Vector, y: &Vector, zstar: &Vector) -> Result<Vector> {
        self.check3(x, y, zstar)?;
        match self {
            InclusionMap::Semilinear(m) => {
                let u = m.u.support_point(&(m.b.transpose() * zstar))?;
                Ok(m.apply(x, y, &u))
            }
            InclusionMap::Tabulated(m) => m
                .image(x, y)
                .max_by(|a, b| a.dot(zstar).total_cmp(&b.dot(zstar)))
                .cloned()
                .ok_or_else(|| Error::Infeasible("F(x, y) is empty".into())),
        }
    }
}

pub(crate) fn adjoint_match(a: &Vector, b: &Vector) -> bool {
    let scale = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() <= ADJOINT_TOL * scale
}

/// States `x_0 … x_N` and, for semilinear maps, the controls `u_0 … u_{N−2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub controls: Vec<Vector>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// Primal problem data: horizon `N`, map `F`, terminal cost `φ` on ℝ²ⁿ and
/// initial sets `Q0`, `Q1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    horizon: usize,
    map: InclusionMap,
    phi: ConvexFn,
    q0: ConvexSet,
    q1: ConvexSet,
}

impl DiscreteProblem {
    pub fn new(
        horizon: usize,
        map: InclusionMap,
        phi: ConvexFn,
        q0: ConvexSet,
        q1: ConvexSet,
    ) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidProblem(format!(
                "horizon must be >= 2, got {horizon}"
            )));
        }
        let n = map.state_dim();
        check_dim("terminal cost", 2 * n, phi.dim())?;
        check_dim("Q0", n, q0.dim())?;
        check_dim("Q1", n, q1.dim())?;
        if phi.is_sampled() {
            return Err(Error::InvalidProblem(
                "terminal cost must have a closed-form conjugate".into(),
            ));
        }
        Ok(DiscreteProblem {
            horizon,
            map,
            phi,
            q0,
            q1,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn map(&self) -> &InclusionMap {
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

    pub fn semilinear(&self) -> Result<&SemilinearMap> {
        self.map
            .as_semilinear()
            .ok_or_else(|| Error::Unsupported("operation needs a semilinear map".into()))
    }

    /// `φ(x_{N−1}, x_N)` of a trajectory.
    pub fn terminal_value(&self, traj: &Trajectory) -> Result<ExtReal> {
        check_dim("trajectory length", self.horizon + 1, traj.states.len())?;
        let n = self.horizon;
        self.phi
            .eval(&stack(&[&traj.states[n - 1], &traj.states[n]]))
    }

    /// Largest constraint violation of a trajectory: set distances of
    /// `x_0`, `x_1`, `u_t` and the recursion residual (semilinear), or the
    /// distance to the nearest listed triple (tabulated).
    pub fn feasibility_violation(&self, traj: &Trajectory) -> Result<f64> {
        let n_steps = self.horizon;
        check_dim("trajectory length", n_steps + 1, traj.states.len())?;
        let mut worst = self
            .q0
            .distance(&traj.states[0])?
            .max(self.q1.distance(&traj.states[1])?);
        match &self.map {
            InclusionMap::Semilinear(m) => {
                check_dim("control sequence length", n_steps - 1, traj.controls.len())?;
                for t in 0..n_steps - 1 {
                    let u = &traj.controls[t];
                    worst = worst.max(m.u.distance(u)?);
                    let next = m.apply(&traj.states[t], &traj.states[t + 1], u);
                    worst = worst.max((next - &traj.states[t + 2]).norm());
                }
            }
            InclusionMap::Tabulated(m) => {
                for t in 0..n_steps - 1 {
                    let (x, y, z) = (&traj.states[t], &traj.states[t + 1], &traj.states[t + 2]);
                    let gap = m
                        .triples
                        .iter()
                        .map(|tr| {
                            (&tr.x - x)
                                .amax()
                                .max((&tr.y - y).amax())
                                .max((&tr.z - z).amax())
                        })
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(gap);
                }
            }
        }
        Ok(worst)
    }
}
