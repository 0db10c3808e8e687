use nalgebra::{DMatrix, SymmetricEigen};

use super::ExtReal;
use crate::error::{check_dim, Error, Result};
use crate::{Matrix, Vector};

/// Absolute tolerance for the equality tests inside conjugate dispatch
/// (`p = c` for affine functions, range membership for quadratics, ...).
pub const CONJ_TOL: f64 = 1e-9;

/// Roundoff slack on inequality domains such as `‖p‖∞ ≤ 1`.
const INEQ_SLACK: f64 = 8.0 * f64::EPSILON;

/// A proper closed convex function on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFn {
    kind: FnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FnKind {
    /// `x ↦ ⟨c, x⟩ + b`
    Affine {
        c: Vector,
        b: f64,
    },
    /// `x ↦ ½⟨x, Px⟩ + ⟨c, x⟩ + b` with `P` symmetric positive semidefinite.
    Quadratic {
        p: Matrix,
        c: Vector,
        b: f64,
        pinv: Matrix,
        /// Orthogonal projector onto the null space of `P`.
        null_proj: Matrix,
    },
    /// `x ↦ Σ_{i∈I} x_i`
    CoordinateSelect {
        dim: usize,
        indices: Vec<usize>,
    },
    Norm1 {
        dim: usize,
    },
    /// `x ↦ ½‖x‖²`
    Norm2Sq {
        dim: usize,
    },
    /// Finite samples `(xᵢ, f(xᵢ))`; only meant as oracle input.
    Sampled {
        points: Vec<Vector>,
        values: Vec<f64>,
    },
    /// `w ↦ inner(Aw)` for invertible `A`; `inv_adjoint` holds `A⁻ᵀ`.
    Composite {
        inner: Box<ConvexFn>,
        map: Matrix,
        inv_adjoint: Matrix,
    },
}

impl ConvexFn {
    pub fn affine(c: Vector, b: f64) -> Result<Self> {
        if c.is_empty() || !b.is_finite() || c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFunction(
                "affine function needs finite coefficients of positive dimension".into(),
            ));
        }
        Ok(ConvexFn {
            kind: FnKind::Affine { c, b },
        })
    }

    pub fn zero(dim: usize) -> Self {
        ConvexFn {
            kind: FnKind::Affine {
                c: Vector::zeros(dim),
                b: 0.0,
            },
        }
    }

    /// Fails unless `p` is square, symmetric and positive semidefinite.
    pub fn quadratic(p: Matrix, c: Vector, b: f64) -> Result<Self> {
        let n = c.len();
        if n == 0 || p.nrows() != n || p.ncols() != n {
            return Err(Error::InvalidFunction(format!(
                "quadratic needs an {n}x{n} matrix, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.iter().chain(c.iter()).any(|x| !x.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidFunction(
                "quadratic coefficients must be finite".into(),
            ));
        }
        let scale = p.amax().max(1.0);
        if (&p - p.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidFunction(
                "quadratic matrix is not symmetric".into(),
            ));
        }
        let eig = SymmetricEigen::new(p.clone());
        let min_eig = eig.eigenvalues.min();
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidFunction(format!(
                "quadratic matrix is not positive semidefinite (eigenvalue {min_eig})"
            )));
        }
        let cut = 1e-12 * scale;
        let mut pinv = DMatrix::zeros(n, n);
        let mut null_proj = DMatrix::zeros(n, n);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let q = eig.eigenvectors.column(k);
            let outer = q * q.transpose();
            if lam > cut {
                pinv += outer / lam;
            } else {
                null_proj += outer;
            }
        }
        Ok(ConvexFn {
            kind: FnKind::Quadratic {
                p,
                c,
                b,
                pinv,
                null_proj,
            },
        })
    }

    pub fn coordinate_select(dim: usize, indices: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFunction("dimension must be positive".into()));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidFunction(format!(
                "coordinate index {i} out of range for dimension {dim}"
            )));
        }
        let mut indices = indices;
        indices.sort_unstable();
        indices.dedup();
        Ok(ConvexFn {
            kind: FnKind::CoordinateSelect { dim, indices },
        })
    }

    pub fn norm1(dim: usize) -> Self {
        ConvexFn {
            kind: FnKind::Norm1 { dim },
        }
    }

    pub fn norm2sq(dim: usize) -> Self {
        ConvexFn {
            kind: FnKind::Norm2Sq { dim },
        }
    }

    pub fn sampled(points: Vec<Vector>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        check_dim("sample values", points.len(), values.len())?;
        let n = points[0].len();
        for p in &points {
            check_dim("sample point", n, p.len())?;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(
                "sampled values must be finite".into(),
            ));
        }
        Ok(ConvexFn {
            kind: FnKind::Sampled { points, values },
        })
    }

    /// Samples a scalar function on `lo, lo + step, …, hi`.
    pub fn sample_1d(f: &ConvexFn, lo: f64, hi: f64, step: f64) -> Result<Self> {
        check_dim("sampled function", 1, f.dim())?;
        let count = ((hi - lo) / step).round() as usize + 1;
        let mut points = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let x = Vector::from_element(1, lo + step * i as f64);
            if let Some(v) = f.eval(&x)?.finite() {
                points.push(x);
                values.push(v);
            }
        }
        Self::sampled(points, values)
    }

    /// `w ↦ inner(Aw)`; `A` must be square and invertible.
    pub fn compose(inner: ConvexFn, map: Matrix) -> Result<Self> {
        check_dim("composite map", inner.dim(), map.nrows())?;
        if !map.is_square() {
            return Err(Error::InvalidFunction(
                "composite map must be square".into(),
            ));
        }
        let inv = map
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidFunction("composite map is singular".into()))?;
        Ok(ConvexFn {
            kind: FnKind::Composite {
                inner: Box::new(inner),
                map,
                inv_adjoint: inv.transpose(),
            },
        })
    }

    /// The lift `Φ(x, y) = φ(x, (y − x)/δ)` of a function `φ` on ℝ²ⁿ.
    ///
    /// Uses the closed-form inverse adjoint `[[E, E], [O, δE]]` of the block
    /// matrix `[[E, O], [−E/δ, E/δ]]`.
    pub fn difference_lift(phi: ConvexFn, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidFunction(format!(
                "lift step must be > 0, got {delta}"
            )));
        }
        let dim = phi.dim();
        if !dim.is_multiple_of(2) {
            return Err(Error::InvalidFunction(
                "difference lift needs a function on R^{2n}".into(),
            ));
        }
        let n = dim / 2;
        let mut map = DMatrix::zeros(dim, dim);
        let mut inv_adjoint = DMatrix::zeros(dim, dim);
        for i in 0..n {
            map[(i, i)] = 1.0;
            map[(n + i, i)] = -1.0 / delta;
            map[(n + i, n + i)] = 1.0 / delta;
            inv_adjoint[(i, i)] = 1.0;
            inv_adjoint[(i, n + i)] = 1.0;
            inv_adjoint[(n + i, n + i)] = delta;
        }
        Ok(ConvexFn {
            kind: FnKind::Composite {
                inner: Box::new(phi),
                map,
                inv_adjoint,
            },
        })
    }

    pub fn kind(&self) -> &FnKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FnKind::Affine { c, .. } => c.len(),
            FnKind::Quadratic { c, .. } => c.len(),
            FnKind::CoordinateSelect { dim, .. }
            | FnKind::Norm1 { dim }
            | FnKind::Norm2Sq { dim } => *dim,
            FnKind::Sampled { points, .. } => points[0].len(),
            FnKind::Composite { map, .. } => map.ncols(),
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.kind, FnKind::Sampled { .. })
    }

    /// `Some((c, b))` when the function is affine, `x ↦ ⟨c, x⟩ + b`.
    pub fn affine_parts(&self) -> Option<(Vector, f64)> {
        match &self.kind {
            FnKind::Affine { c, b } => Some((c.clone(), *b)),
            FnKind::CoordinateSelect { dim, indices } => {
                let mut c = Vector::zeros(*dim);
                for &i in indices {
                    c[i] = 1.0;
                }
                Some((c, 0.0))
            }
            FnKind::Composite { inner, map, .. } => {
                inner.affine_parts().map(|(c, b)| (map.transpose() * c, b))
            }
            _ => None,
        }
    }

    pub fn eval(&self, x: &Vector) -> Result<ExtReal> {
        check_dim("function argument", self.dim(), x.len())?;
        Ok(match &self.kind {
            FnKind::Affine { c, b } => ExtReal::new(c.dot(x) + b),
            FnKind::Quadratic { p, c, b, .. } => ExtReal::new(0.5 * x.dot(&(p * x)) + c.dot(x) + b),
            FnKind::CoordinateSelect { indices, .. } => {
                ExtReal::new(indices.iter().map(|&i| x[i]).sum())
            }
            FnKind::Norm1 { .. } => ExtReal::new(x.lp_norm(1)),
            FnKind::Norm2Sq { .. } => ExtReal::new(0.5 * x.norm_squared()),
            FnKind::Sampled { points, values } => sampled_eval(points, values, x),
            FnKind::Composite { inner, map, .. } => inner.eval(&(map * x))?,
        })
    }

    /// Closed-form conjugate `f*(p) = sup_x ⟨x, p⟩ − f(x)`.
    ///
    /// Sampled functions are rejected; use [`super::lf_numeric`] for them.
    pub fn conjugate(&self, p: &Vector) -> Result<ExtReal> {
        check_dim("conjugate argument", self.dim(), p.len())?;
        if let Some((c, b)) = self.affine_parts() {
            return Ok(if (p - c).amax() <= CONJ_TOL {
                ExtReal::new(-b)
            } else {
                ExtReal::PosInf
            });
        }
        Ok(match &self.kind {
            FnKind::Quadratic {
                c,
                b,
                pinv,
                null_proj,
                ..
            } => {
                let r = p - c;
                if (null_proj * &r).amax() > CONJ_TOL {
                    ExtReal::PosInf
                } else {
                    ExtReal::new(0.5 * r.dot(&(pinv * &r)) - b)
                }
            }
            FnKind::Norm1 { .. } => {
                if p.amax() <= 1.0 + INEQ_SLACK {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            FnKind::Norm2Sq { .. } => ExtReal::new(0.5 * p.norm_squared()),
            FnKind::Composite {
                inner, inv_adjoint, ..
            } => inner.conjugate(&(inv_adjoint * p))?,
            FnKind::Sampled { .. } => {
                return Err(Error::Unsupported(
                    "closed-form conjugate of a sampled function".into(),
                ))
            }
            FnKind::Affine { .. } | FnKind::CoordinateSelect { .. } => unreachable!(),
        })
    }

    /// The affine hull of `dom f*` as `{p : N·p = r}`; `None` when the domain
    /// is full-dimensional.
    pub fn conjugate_domain_hull(&self) -> Result<Option<(Matrix, Vector)>> {
        if let Some((c, _)) = self.affine_parts() {
            return Ok(Some((Matrix::identity(c.len(), c.len()), c)));
        }
        Ok(match &self.kind {
            FnKind::Quadratic { c, null_proj, .. } => {
                if null_proj.amax() <= CONJ_TOL {
                    None
                } else {
                    Some((null_proj.clone(), null_proj * c))
                }
            }
            FnKind::Norm1 { .. } | FnKind::Norm2Sq { .. } => None,
            FnKind::Composite {
                inner, inv_adjoint, ..
            } => inner
                .conjugate_domain_hull()?
                .map(|(n, r)| (n * inv_adjoint, r)),
            FnKind::Sampled { .. } => {
                return Err(Error::Unsupported(
                    "conjugate domain of a sampled function".into(),
                ))
            }
            FnKind::Affine { .. } | FnKind::CoordinateSelect { .. } => unreachable!(),
        })
    }

    /// A point of `∂f*(p)`, i.e. a maximizer of `⟨x, p⟩ − f(x)`, chosen with
    /// minimal norm. `None` when `f*(p) = +∞`.
    pub fn conjugate_argmax(&self, p: &Vector) -> Result<Option<Vector>> {
        if self.conjugate(p)?.is_pos_inf() {
            return Ok(None);
        }
        Ok(Some(match &self.kind {
            FnKind::Affine { .. } | FnKind::CoordinateSelect { .. } | FnKind::Norm1 { .. } => {
                Vector::zeros(p.len())
            }
            FnKind::Quadratic { c, pinv, .. } => pinv * (p - c),
            FnKind::Norm2Sq { .. } => p.clone(),
            FnKind::Composite {
                inner, inv_adjoint, ..
            } => {
                let inner_x = inner
                    .conjugate_argmax(&(inv_adjoint * p))?
                    .expect("finite conjugate has a maximizer");
                inv_adjoint.transpose() * inner_x
            }
            FnKind::Sampled { .. } => unreachable!("conjugate rejects sampled functions"),
        }))
    }

    /// One element of `∂f(x)`; gradients for smooth variants and the
    /// minimal-norm element at kinks.
    pub fn subgradient(&self, x: &Vector) -> Result<Vector> {
        check_dim("subgradient argument", self.dim(), x.len())?;
        if let Some((c, _)) = self.affine_parts() {
            return Ok(c);
        }
        Ok(match &self.kind {
            FnKind::Quadratic { p, c, .. } => p * x + c,
            FnKind::Norm1 { .. } => x.map(|xi| {
                if xi > 0.0 {
                    1.0
                } else if xi < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }),
            FnKind::Norm2Sq { .. } => x.clone(),
            FnKind::Composite { inner, map, .. } => {
                map.transpose() * inner.subgradient(&(map * x))?
            }
            FnKind::Sampled { .. } => {
                return Err(Error::Unsupported(
                    "subgradient of a sampled function".into(),
                ))
            }
            FnKind::Affine { .. } | FnKind::CoordinateSelect { .. } => unreachable!(),
        })
    }
}

fn sampled_eval(points: &[Vector], values: &[f64], x: &Vector) -> ExtReal {
    if let Some(i) = points.iter().position(|p| (p - x).amax() <= 1e-12) {
        return ExtReal::new(values[i]);
    }
    if x.len() != 1 {
        return ExtReal::PosInf;
    }
    // piecewise-linear interpolation between the bracketing samples
    let t = x[0];
    let mut left: Option<(f64, f64)> = None;
    let mut right: Option<(f64, f64)> = None;
    for (p, &v) in points.iter().zip(values) {
        let s = p[0];
        if s <= t && left.is_none_or(|(ls, _)| s > ls) {
            left = Some((s, v));
        }
        if s >= t && right.is_none_or(|(rs, _)| s < rs) {
            right = Some((s, v));
        }
    }
    match (left, right) {
        (Some((ls, lv)), Some((rs, rv))) if rs > ls => {
            ExtReal::new(lv + (rv - lv) * (t - ls) / (rs - ls))
        }
        (Some((_, lv)), Some(_)) => ExtReal::new(lv),
        _ => ExtReal::PosInf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn conjugate_examples() {
        let f = ConvexFn::norm2sq(2);
        assert_eq!(f.conjugate(&v(&[1.0, 2.0])).unwrap(), 2.5);

        let a = ConvexFn::affine(v(&[1.0, 0.0]), 3.0).unwrap();
        assert_eq!(a.conjugate(&v(&[1.0, 0.0])).unwrap(), -3.0);
        assert_eq!(a.conjugate(&v(&[0.0, 1.0])).unwrap(), ExtReal::PosInf);

        let sel = ConvexFn::coordinate_select(2, vec![1]).unwrap();
        assert_eq!(sel.conjugate(&v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(sel.conjugate(&v(&[0.0, 1.1])).unwrap(), ExtReal::PosInf);

        let n1 = ConvexFn::norm1(2);
        assert_eq!(n1.conjugate(&v(&[0.5, -1.0])).unwrap(), 0.0);
        assert_eq!(n1.conjugate(&v(&[1.5, 0.0])).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn quadratic_conjugate_uses_inverse() {
        let p = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let q = ConvexFn::quadratic(p, v(&[1.0, -1.0]), 0.5).unwrap();
        // f*(p) = ½⟨p−c, P⁻¹(p−c)⟩ − b
        let val = q.conjugate(&v(&[3.0, 3.0])).unwrap().finite().unwrap();
        assert_abs_diff_eq!(val, 0.5 * (4.0 / 2.0 + 16.0 / 4.0) - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn singular_quadratic_conjugate_is_finite_only_on_range() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let q = ConvexFn::quadratic(p, v(&[0.0, 2.0]), 0.0).unwrap();
        assert_eq!(q.conjugate(&v(&[3.0, 2.0])).unwrap(), 4.5);
        assert_eq!(q.conjugate(&v(&[3.0, 1.0])).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn indefinite_quadratic_rejected() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = ConvexFn::quadratic(p, v(&[0.0, 0.0]), 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidFunction(_)));
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(ConvexFn::quadratic(asym, v(&[0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(
            ConvexFn::norm2sq(2).subgradient(&v(&[1.0, 2.0])).unwrap(),
            v(&[1.0, 2.0])
        );
        assert_eq!(
            ConvexFn::norm1(1).subgradient(&v(&[0.0])).unwrap(),
            v(&[0.0])
        );
        let a = ConvexFn::affine(v(&[2.0, -1.0]), 7.0).unwrap();
        assert_eq!(a.subgradient(&v(&[9.0, 9.0])).unwrap(), v(&[2.0, -1.0]));
    }

    #[test]
    fn difference_lift_matches_generic_composition() {
        let delta = 0.25;
        let phi = ConvexFn::quadratic(
            Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            v(&[0.3, -0.2]),
            1.0,
        )
        .unwrap();
        let lifted = ConvexFn::difference_lift(phi.clone(), delta).unwrap();
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0 / delta, 1.0 / delta]);
        let generic = ConvexFn::compose(phi, a).unwrap();
        for w in [v(&[1.0, 2.0]), v(&[-0.5, 0.1])] {
            assert_abs_diff_eq!(
                lifted.eval(&w).unwrap().to_f64(),
                generic.eval(&w).unwrap().to_f64(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                lifted.conjugate(&w).unwrap().to_f64(),
                generic.conjugate(&w).unwrap().to_f64(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn conjugate_argmax_attains_conjugate() {
        let fns = [
            ConvexFn::norm2sq(2),
            ConvexFn::quadratic(
                Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]),
                v(&[0.5, 0.0]),
                -1.0,
            )
            .unwrap(),
            ConvexFn::difference_lift(ConvexFn::norm2sq(2), 0.5).unwrap(),
        ];
        let p = v(&[0.7, -1.3]);
        for f in &fns {
            let x = f.conjugate_argmax(&p).unwrap().unwrap();
            let lhs = x.dot(&p) - f.eval(&x).unwrap().to_f64();
            assert_abs_diff_eq!(lhs, f.conjugate(&p).unwrap().to_f64(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_interpolates_in_one_dimension() {
        let f = ConvexFn::sample_1d(&ConvexFn::norm2sq(1), -1.0, 1.0, 0.5).unwrap();
        assert_eq!(f.eval(&v(&[0.5])).unwrap(), 0.125);
        assert_abs_diff_eq!(
            f.eval(&v(&[0.25])).unwrap().to_f64(),
            0.0625,
            epsilon = 1e-15
        );
        assert_eq!(f.eval(&v(&[2.0])).unwrap(), ExtReal::PosInf);
        assert!(f.conjugate(&v(&[1.0])).is_err());
    }
}
