use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Directions with norm below this are treated as zero when a support point
/// has to be selected among ties.
pub const TIE_TOL: f64 = 1e-12;

/// Nonempty compact convex subset of ℝⁿ.
///
/// Only validated constructors exist, so every value satisfies the variant
/// invariants (`lower ≤ upper`, `radius ≥ 0`, nonempty vertex list).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    kind: SetKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Box {
        lower: Vector,
        upper: Vector,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    /// Convex hull of the listed vertices (redundant vertices allowed).
    Polytope {
        vertices: Vec<Vector>,
    },
    Singleton {
        point: Vector,
    },
}

fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ConvexSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidSet("box must have positive dimension".into()));
        }
        if !all_finite(&lower) || !all_finite(&upper) {
            return Err(Error::InvalidSet("box bounds must be finite".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidSet(format!(
                "box lower bound exceeds upper bound in coordinate {i}"
            )));
        }
        Ok(ConvexSet {
            kind: SetKind::Box { lower, upper },
        })
    }

    /// Interval `[lo, hi]` in ℝ.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(Vector::from_element(1, lo), Vector::from_element(1, hi))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidSet(
                "ball must have positive dimension".into(),
            ));
        }
        if !all_finite(&center) || !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidSet(
                "ball needs a finite center and a finite radius >= 0".into(),
            ));
        }
        Ok(ConvexSet {
            kind: SetKind::Ball { center, radius },
        })
    }

    pub fn polytope(vertices: Vec<Vector>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidSet("polytope needs at least one vertex".into()))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidSet(
                "polytope must have positive dimension".into(),
            ));
        }
        for v in &vertices {
            check_dim("polytope vertex", n, v.len())?;
            if !all_finite(v) {
                return Err(Error::InvalidSet("polytope vertices must be finite".into()));
            }
        }
        Ok(ConvexSet {
            kind: SetKind::Polytope { vertices },
        })
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        if point.is_empty() || !all_finite(&point) {
            return Err(Error::InvalidSet(
                "singleton needs a finite point of positive dimension".into(),
            ));
        }
        Ok(ConvexSet {
            kind: SetKind::Singleton { point },
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Box { lower, .. } => lower.len(),
            SetKind::Ball { center, .. } => center.len(),
            SetKind::Polytope { vertices } => vertices[0].len(),
            SetKind::Singleton { point } => point.len(),
        }
    }

    /// Support function `W_S(d) = sup { ⟨x, d⟩ : x ∈ S }`; finite because `S`
    /// is compact.
    pub fn support(&self, d: &Vector) -> Result<f64> {
        check_dim("support direction", self.dim(), d.len())?;
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => (0..d.len())
                .map(|i| {
                    if d[i] >= 0.0 {
                        d[i] * upper[i]
                    } else {
                        d[i] * lower[i]
                    }
                })
                .sum(),
            SetKind::Ball { center, radius } => center.dot(d) + radius * d.norm(),
            SetKind::Polytope { vertices } => vertices
                .iter()
                .map(|v| v.dot(d))
                .fold(f64::NEG_INFINITY, f64::max),
            SetKind::Singleton { point } => point.dot(d),
        })
    }

    /// A canonical point of `S` attaining the support value in direction `d`.
    ///
    /// Zero (or tied) directions select the point of `S` nearest the origin,
    /// coordinatewise for boxes.
    pub fn support_point(&self, d: &Vector) -> Result<Vector> {
        check_dim("support direction", self.dim(), d.len())?;
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => Vector::from_fn(d.len(), |i, _| {
                if d[i] > TIE_TOL {
                    upper[i]
                } else if d[i] < -TIE_TOL {
                    lower[i]
                } else {
                    0.0_f64.clamp(lower[i], upper[i])
                }
            }),
            SetKind::Ball { center, radius } => {
                let norm = d.norm();
                if norm <= TIE_TOL {
                    self.project(&Vector::zeros(d.len()))?.0
                } else {
                    center + d * (*radius / norm)
                }
            }
            SetKind::Polytope { vertices } => {
                if d.norm() <= TIE_TOL {
                    self.project(&Vector::zeros(d.len()))?.0
                } else {
                    let mut best = 0;
                    let mut best_val = f64::NEG_INFINITY;
                    for (i, v) in vertices.iter().enumerate() {
                        let val = v.dot(d);
                        if val > best_val {
                            best_val = val;
                            best = i;
                        }
                    }
                    vertices[best].clone()
                }
            }
            SetKind::Singleton { point } => point.clone(),
        })
    }

    /// Euclidean projection onto `S` and the distance from `x` to `S`.
    pub fn project(&self, x: &Vector) -> Result<(Vector, f64)> {
        check_dim("projected point", self.dim(), x.len())?;
        let p = match &self.kind {
            SetKind::Box { lower, upper } => {
                Vector::from_fn(x.len(), |i, _| x[i].clamp(lower[i], upper[i]))
            }
            SetKind::Ball { center, radius } => {
                let offset = x - center;
                let norm = offset.norm();
                if norm <= *radius {
                    x.clone()
                } else {
                    center + offset * (*radius / norm)
                }
            }
            SetKind::Polytope { vertices } => {
                let shifted: Vec<Vector> = vertices.iter().map(|v| v - x).collect();
                x + min_norm_point(&shifted)
            }
            SetKind::Singleton { point } => point.clone(),
        };
        let dist = (&p - x).norm();
        Ok((p, dist))
    }

    pub fn distance(&self, x: &Vector) -> Result<f64> {
        Ok(self.project(x)?.1)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// A fixed interior-ish reference point (box midpoint, ball center,
    /// vertex mean, the point itself).
    pub fn center(&self) -> Vector {
        match &self.kind {
            SetKind::Box { lower, upper } => (lower + upper) * 0.5,
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Polytope { vertices } => {
                let mut sum = Vector::zeros(vertices[0].len());
                for v in vertices {
                    sum += v;
                }
                sum / vertices.len() as f64
            }
            SetKind::Singleton { point } => point.clone(),
        }
    }

    /// Smallest axis-aligned box containing `S`.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        match &self.kind {
            SetKind::Box { lower, upper } => (lower.clone(), upper.clone()),
            SetKind::Ball { center, radius } => {
                (center.add_scalar(-radius), center.add_scalar(*radius))
            }
            SetKind::Polytope { vertices } => {
                let n = vertices[0].len();
                let lo = Vector::from_fn(n, |i, _| {
                    vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)
                });
                let hi = Vector::from_fn(n, |i, _| {
                    vertices
                        .iter()
                        .map(|v| v[i])
                        .fold(f64::NEG_INFINITY, f64::max)
                });
                (lo, hi)
            }
            SetKind::Singleton { point } => (point.clone(), point.clone()),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// `λS` for `λ ≥ 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidSet(format!(
                "scale factor must be finite and >= 0, got {lambda}"
            )));
        }
        match &self.kind {
            SetKind::Box { lower, upper } => Self::boxed(lower * lambda, upper * lambda),
            SetKind::Ball { center, radius } => Self::ball(center * lambda, radius * lambda),
            SetKind::Polytope { vertices } => {
                Self::polytope(vertices.iter().map(|v| v * lambda).collect())
            }
            SetKind::Singleton { point } => Self::singleton(point * lambda),
        }
    }

    pub fn translated(&self, shift: &Vector) -> Result<Self> {
        check_dim("translation", self.dim(), shift.len())?;
        match &self.kind {
            SetKind::Box { lower, upper } => Self::boxed(lower + shift, upper + shift),
            SetKind::Ball { center, radius } => Self::ball(center + shift, *radius),
            SetKind::Polytope { vertices } => {
                Self::polytope(vertices.iter().map(|v| v + shift).collect())
            }
            SetKind::Singleton { point } => Self::singleton(point + shift),
        }
    }

    /// Vertex list when `S` is polyhedral (box corners, polytope vertices,
    /// the singleton point); `None` for balls.
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                let n = lower.len();
                if n > 16 {
                    return None;
                }
                Some(
                    (0..1usize << n)
                        .map(|mask| {
                            Vector::from_fn(n, |i, _| {
                                if mask >> i & 1 == 1 {
                                    upper[i]
                                } else {
                                    lower[i]
                                }
                            })
                        })
                        .collect(),
                )
            }
            SetKind::Polytope { vertices } => Some(vertices.clone()),
            SetKind::Singleton { point } => Some(vec![point.clone()]),
            SetKind::Ball { .. } => None,
        }
    }

    /// Minkowski sum `S + T`.
    ///
    /// Closed under box+box, ball+ball, singleton+anything and any pair of
    /// polyhedral sets. A ball plus a non-ball polyhedron is not representable
    /// by the variants and is rejected.
    pub fn minkowski_sum(&self, other: &ConvexSet) -> Result<Self> {
        check_dim("Minkowski sum", self.dim(), other.dim())?;
        match (&self.kind, &other.kind) {
            (SetKind::Singleton { point }, _) => other.translated(point),
            (_, SetKind::Singleton { point }) => self.translated(point),
            (
                SetKind::Box {
                    lower: l1,
                    upper: u1,
                },
                SetKind::Box {
                    lower: l2,
                    upper: u2,
                },
            ) => Self::boxed(l1 + l2, u1 + u2),
            (
                SetKind::Ball {
                    center: c1,
                    radius: r1,
                },
                SetKind::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => Self::ball(c1 + c2, r1 + r2),
            _ => match (self.vertices(), other.vertices()) {
                (Some(a), Some(b)) => {
                    let mut sums = Vec::with_capacity(a.len() * b.len());
                    for va in &a {
                        for vb in &b {
                            sums.push(va + vb);
                        }
                    }
                    Self::polytope(sums)
                }
                _ => Err(Error::Unsupported(
                    "Minkowski sum of a ball with a non-ball polyhedral set".into(),
                )),
            },
        }
    }

    /// Whether `S` has nonempty interior in ℝⁿ.
    pub fn has_interior(&self) -> bool {
        match &self.kind {
            SetKind::Box { lower, upper } => (0..lower.len()).all(|i| lower[i] < upper[i]),
            SetKind::Ball { radius, .. } => *radius > 0.0,
            SetKind::Polytope { vertices } => {
                let n = vertices[0].len();
                if vertices.len() <= n {
                    return false;
                }
                let diffs = DMatrix::from_fn(n, vertices.len() - 1, |i, j| {
                    vertices[j + 1][i] - vertices[0][i]
                });
                let scale = diffs.amax().max(1.0);
                diffs.rank(1e-10 * scale) == n
            }
            SetKind::Singleton { .. } => false,
        }
    }

    /// Points of a uniform grid over the bounding box with `resolution`
    /// points per coordinate, keeping only points inside `S`. A resolution of
    /// 1 uses the box midpoint. Singletons always yield their point.
    pub fn grid(&self, resolution: usize) -> Result<Vec<Vector>> {
        if resolution == 0 {
            return Err(Error::EmptyGrid);
        }
        if let SetKind::Singleton { point } = &self.kind {
            return Ok(vec![point.clone()]);
        }
        let (lo, hi) = self.bounding_box();
        let axes: Vec<Vec<f64>> = (0..lo.len())
            .map(|i| axis_points(lo[i], hi[i], resolution))
            .collect();
        let filter = !matches!(self.kind, SetKind::Box { .. });
        let mut points = Vec::new();
        for p in cartesian(axes) {
            if !filter || self.contains(&p, 1e-12)? {
                points.push(p);
            }
        }
        Ok(points)
    }

    /// Number of points [`ConvexSet::grid`] enumerates before filtering.
    pub fn grid_size_bound(&self, resolution: usize) -> f64 {
        match &self.kind {
            SetKind::Singleton { .. } => 1.0,
            _ => {
                let (lo, hi) = self.bounding_box();
                (0..lo.len())
                    .map(|i| {
                        if lo[i] == hi[i] {
                            1.0
                        } else {
                            resolution as f64
                        }
                    })
                    .product()
            }
        }
    }
}

pub(crate) fn axis_points(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    if resolution == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i + 1 == resolution {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Cartesian product of coordinate axes, first coordinate varying slowest.
pub(crate) fn cartesian(axes: Vec<Vec<f64>>) -> impl Iterator<Item = Vector> {
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total).map(move |mut idx| {
        let mut v = Vector::zeros(axes.len());
        for (i, axis) in axes.iter().enumerate().rev() {
            v[i] = axis[idx % axis.len()];
            idx /= axis.len();
        }
        v
    })
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
fn min_norm_point(points: &[Vector]) -> Vector {
    let scale = points
        .iter()
        .map(|p| p.norm_squared())
        .fold(0.0, f64::max)
        .max(1e-300);
    let eps = 1e-14 * scale;
    let weight_eps = 1e-13;

    let first = (0..points.len())
        .min_by(|&a, &b| {
            points[a]
                .norm_squared()
                .total_cmp(&points[b].norm_squared())
        })
        .unwrap();
    let mut active = vec![first];
    let mut lambda = vec![1.0];
    let mut w = points[first].clone();

    for _ in 0..(50 * points.len() + 100) {
        let (j, wq) = (0..points.len())
            .map(|j| (j, w.dot(&points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if w.norm_squared() - wq <= eps || active.contains(&j) {
            break;
        }
        active.push(j);
        lambda.push(0.0);

        loop {
            let alpha = affine_min_weights(points, &active);
            if alpha.iter().all(|&a| a > weight_eps) {
                lambda = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= weight_eps && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let mut k = 0;
            while k < active.len() {
                if lambda[k] <= weight_eps {
                    active.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            if active.is_empty() {
                // numerical breakdown; fall back to the nearest vertex
                active.push(first);
                lambda.push(1.0);
                break;
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            if active.len() == 1 {
                break;
            }
        }
        w = combine(points, &active, &lambda);
    }
    w
}

fn combine(points: &[Vector], active: &[usize], weights: &[f64]) -> Vector {
    let mut w = Vector::zeros(points[0].len());
    for (&i, &l) in active.iter().zip(weights) {
        w += &points[i] * l;
    }
    w
}

/// Weights of the minimum-norm point of the affine hull of the active points.
fn affine_min_weights(points: &[Vector], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = points[active[a]].dot(&points[active[b]]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = Vector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| {
            kkt.svd(true, true)
                .solve(&rhs, 1e-14)
                .unwrap_or_else(|_| Vector::from_element(k + 1, 1.0 / k as f64))
        });
    sol.rows(0, k).iter().copied().collect()
}
