use super::set::{axis_points, cartesian};
use super::{ConvexFn, ConvexSet, ExtReal, FnKind};
use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Distance below which a point counts as a member of a set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Uniform box grid: `resolution` points per coordinate on `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vector,
    pub upper: Vector,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(lower: Vector, upper: Vector, resolution: usize) -> Result<Self> {
        check_dim("grid bounds", lower.len(), upper.len())?;
        if resolution == 0 || lower.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if (0..lower.len()).any(|i| lower[i] > upper[i]) {
            return Err(Error::InvalidProblem(
                "grid lower bound exceeds upper bound".into(),
            ));
        }
        Ok(GridSpec {
            lower,
            upper,
            resolution,
        })
    }

    /// Symmetric scalar grid `[-half_width, half_width]` with spacing `step`.
    pub fn symmetric_1d(half_width: f64, step: f64) -> Result<Self> {
        let resolution = (2.0 * half_width / step).round() as usize + 1;
        Self::new(
            Vector::from_element(1, -half_width),
            Vector::from_element(1, half_width),
            resolution,
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn points(&self) -> impl Iterator<Item = Vector> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| axis_points(self.lower[i], self.upper[i], self.resolution))
            .collect();
        cartesian(axes)
    }
}

/// Grid Legendre–Fenchel transform `max_i ⟨xᵢ, p⟩ − f(xᵢ)` of a sampled
/// function.
///
/// This is a lower bound of the true conjugate of any convex function that
/// agrees with the samples; it converges as the grid refines.
pub fn lf_numeric(f: &ConvexFn, p: &Vector) -> Result<ExtReal> {
    let FnKind::Sampled { points, values } = f.kind() else {
        return Err(Error::Unsupported(
            "lf_numeric needs a sampled function".into(),
        ));
    };
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_dim("conjugate argument", f.dim(), p.len())?;
    let best = points
        .iter()
        .zip(values)
        .map(|(x, v)| x.dot(p) - v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ExtReal::new(best))
}

/// Infimal convolution `(f ⊕ g)(u) = inf { f(u¹) + g(u − u¹) }` minimized
/// over `u¹` on a grid.
///
/// Folding handles more than two summands: `f ⊕ g ⊕ h = (f ⊕ g) ⊕ h`.
pub fn infconv_numeric(f: &ConvexFn, g: &ConvexFn, u: &Vector, grid: &GridSpec) -> Result<ExtReal> {
    check_dim("infimal convolution", f.dim(), g.dim())?;
    check_dim("infimal convolution point", f.dim(), u.len())?;
    check_dim("infimal convolution grid", f.dim(), grid.dim())?;
    let mut best = ExtReal::PosInf;
    for split in grid.points() {
        let val = f.eval(&split)?.checked_add(g.eval(&(u - &split))?)?;
        best = best.min(val);
    }
    Ok(best)
}

/// Fenchel–Young residual `f(x) + f*(p) − ⟨p, x⟩`.
///
/// Nonnegative up to rounding; zero exactly when `p ∈ ∂f(x)`. Reported as
/// `+∞` when either `f(x)` or `f*(p)` is infinite.
pub fn fenchel_residual(f: &ConvexFn, x: &Vector, p: &Vector) -> Result<ExtReal> {
    let fx = f.eval(x)?;
    let fp = f.conjugate(p)?;
    match (fx, fp) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => Ok(ExtReal::new(a + b - p.dot(x))),
        _ => Ok(ExtReal::PosInf),
    }
}

/// `W_S(d) − ⟨d, x⟩` for `x ∈ S`; zero exactly when `x` attains the support
/// of `S` in direction `d`.
pub fn support_attainment_residual(s: &ConvexSet, x: &Vector, d: &Vector) -> Result<f64> {
    let dist = s.distance(x)?;
    if dist > MEMBERSHIP_TOL {
        return Err(Error::NotInDomain(format!(
            "point lies at distance {dist:e} from the set"
        )));
    }
    Ok(s.support(d)? - d.dot(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn lf_numeric_examples() {
        let sq = ConvexFn::sample_1d(&ConvexFn::norm2sq(1), -3.0, 3.0, 0.01).unwrap();
        assert_abs_diff_eq!(
            lf_numeric(&sq, &v(&[2.0])).unwrap().to_f64(),
            2.0,
            epsilon = 0.01
        );

        let abs = ConvexFn::sample_1d(&ConvexFn::norm1(1), -3.0, 3.0, 0.01).unwrap();
        assert_abs_diff_eq!(
            lf_numeric(&abs, &v(&[0.5])).unwrap().to_f64(),
            0.0,
            epsilon = 0.01
        );

        let point = ConvexFn::sampled(vec![v(&[0.0])], vec![0.0]).unwrap();
        assert_eq!(lf_numeric(&point, &v(&[17.0])).unwrap(), 0.0);

        assert!(lf_numeric(&ConvexFn::norm1(1), &v(&[0.0])).is_err());
        assert!(matches!(
            ConvexFn::sampled(vec![], vec![]),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn infconv_examples() {
        let grid = GridSpec::symmetric_1d(4.0, 0.001).unwrap();
        let abs = ConvexFn::norm1(1);
        let sq = ConvexFn::norm2sq(1);
        // Huber function: ½u² for |u| ≤ 1, |u| − ½ beyond
        let at2 = infconv_numeric(&abs, &sq, &v(&[2.0]), &grid)
            .unwrap()
            .to_f64();
        assert_abs_diff_eq!(at2, 1.5, epsilon = 1e-6);
        let at_half = infconv_numeric(&abs, &sq, &v(&[0.5]), &grid)
            .unwrap()
            .to_f64();
        assert_abs_diff_eq!(at_half, 0.125, epsilon = 1e-6);

        let z = ConvexFn::zero(1);
        assert_eq!(infconv_numeric(&z, &z, &v(&[3.3]), &grid).unwrap(), 0.0);
    }

    #[test]
    fn fenchel_residual_examples() {
        let sq = ConvexFn::norm2sq(1);
        assert_eq!(fenchel_residual(&sq, &v(&[2.0]), &v(&[2.0])).unwrap(), 0.0);
        assert_eq!(fenchel_residual(&sq, &v(&[2.0]), &v(&[0.0])).unwrap(), 2.0);
        let lin = ConvexFn::coordinate_select(2, vec![0]).unwrap();
        assert_eq!(
            fenchel_residual(&lin, &v(&[5.0, 7.0]), &v(&[1.0, 0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            fenchel_residual(&lin, &v(&[5.0, 7.0]), &v(&[1.0, 1.0])).unwrap(),
            ExtReal::PosInf
        );
    }

    #[test]
    fn support_attainment_examples() {
        let unit = ConvexSet::interval(0.0, 1.0).unwrap();
        assert_eq!(
            support_attainment_residual(&unit, &v(&[0.0]), &v(&[-1.0])).unwrap(),
            0.0
        );
        assert_eq!(
            support_attainment_residual(&unit, &v(&[1.0]), &v(&[-1.0])).unwrap(),
            1.0
        );
        let zero = ConvexSet::singleton(v(&[0.0])).unwrap();
        assert_eq!(
            support_attainment_residual(&zero, &v(&[0.0]), &v(&[4.2])).unwrap(),
            0.0
        );
        assert!(matches!(
            support_attainment_residual(&unit, &v(&[2.0]), &v(&[1.0])),
            Err(Error::NotInDomain(_))
        ));
    }
}
