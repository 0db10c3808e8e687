#![allow(dead_code)]

use incdual::convex::{ConvexFn, ConvexSet};
use incdual::discretization::{ContinuousProblem, MeshSpec};
use incdual::inclusion::{DiscreteProblem, SemilinearMap, Trajectory};
use incdual::io::ContinuousSpec;
use incdual::{Matrix, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn s(x: f64) -> Vector {
    Vector::from_element(1, x)
}

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn unit() -> ConvexSet {
    ConvexSet::interval(-1.0, 1.0).unwrap()
}

/// N = 2, A0 = A1 = B = 1, U = [−1, 1], Q0 = {0}, Q1 = [0, 1], φ(x, y) = y.
pub fn worked() -> DiscreteProblem {
    DiscreteProblem::new(
        2,
        SemilinearMap::scalar(1.0, 1.0, 1.0, unit()).unwrap().into(),
        ConvexFn::coordinate_select(2, vec![1]).unwrap(),
        ConvexSet::singleton(s(0.0)).unwrap(),
        ConvexSet::interval(0.0, 1.0).unwrap(),
    )
    .unwrap()
}

/// N = 3, A0 = 0, A1 = B = 1, U = [−1, 1], Q0 = Q1 = {1}, φ = ½(x² + y²).
pub fn quadratic() -> DiscreteProblem {
    DiscreteProblem::new(
        3,
        SemilinearMap::scalar(0.0, 1.0, 1.0, unit()).unwrap().into(),
        ConvexFn::norm2sq(2),
        ConvexSet::singleton(s(1.0)).unwrap(),
        ConvexSet::singleton(s(1.0)).unwrap(),
    )
    .unwrap()
}

/// `x'' ∈ [−1, 1]`, `x(0) = x'(0) = 0`, minimize `x(1)`.
pub fn double_integrator() -> ContinuousProblem {
    let zero = ConvexSet::singleton(s(0.0)).unwrap();
    ContinuousProblem::new(
        SemilinearMap::scalar(0.0, 0.0, 1.0, unit()).unwrap(),
        ConvexFn::coordinate_select(2, vec![0]).unwrap(),
        zero.clone(),
        zero,
    )
    .unwrap()
}

pub fn double_integrator_spec(steps: &[usize]) -> ContinuousSpec {
    ContinuousSpec {
        problem: double_integrator(),
        meshes: steps
            .iter()
            .map(|&k| MeshSpec::from_steps(k).unwrap())
            .collect(),
        reference: Some(-0.5),
    }
}

/// `−(1 − δ)(1 − 2δ)/2`
pub fn double_integrator_value(delta: f64) -> f64 {
    -(1.0 - delta) * (1.0 - 2.0 * delta) / 2.0
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-r..=r))
}

pub fn rand_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-r..=r))
}

pub fn rand_set(rng: &mut ChaCha8Rng, n: usize) -> ConvexSet {
    let c = rand_vec(rng, n, 1.0);
    match rng.gen_range(0..4) {
        0 => {
            let w = Vector::from_fn(n, |_, _| rng.gen_range(0.0..=1.0));
            ConvexSet::boxed(&c - &w, &c + &w).unwrap()
        }
        1 => ConvexSet::ball(c, rng.gen_range(0.1..=1.5)).unwrap(),
        2 => {
            let k = rng.gen_range(1..=4);
            ConvexSet::polytope((0..k).map(|_| &c + rand_vec(rng, n, 1.0)).collect()).unwrap()
        }
        _ => ConvexSet::singleton(c).unwrap(),
    }
}

pub fn rand_cost(rng: &mut ChaCha8Rng, dim: usize) -> ConvexFn {
    match rng.gen_range(0..5) {
        0 => ConvexFn::affine(rand_vec(rng, dim, 1.0), rng.gen_range(-1.0..=1.0)).unwrap(),
        1 => {
            let l = rand_mat(rng, dim, dim, 1.0);
            let p = &l * l.transpose();
            ConvexFn::quadratic(p, rand_vec(rng, dim, 1.0), rng.gen_range(-1.0..=1.0)).unwrap()
        }
        2 => ConvexFn::norm1(dim),
        3 => ConvexFn::norm2sq(dim),
        _ => {
            let idx = (0..dim).filter(|_| rng.gen_bool(0.5)).collect();
            ConvexFn::coordinate_select(dim, idx).unwrap()
        }
    }
}

pub fn rand_semilinear(rng: &mut ChaCha8Rng, n: usize) -> SemilinearMap {
    let r = rng.gen_range(1..=2);
    SemilinearMap::new(
        rand_mat(rng, n, n, 1.0),
        rand_mat(rng, n, n, 1.0),
        rand_mat(rng, n, r, 1.0),
        rand_set(rng, r),
    )
    .unwrap()
}

pub fn rand_problem(rng: &mut ChaCha8Rng, max_n: usize, max_horizon: usize) -> DiscreteProblem {
    let n = rng.gen_range(1..=max_n);
    let horizon = rng.gen_range(2..=max_horizon);
    DiscreteProblem::new(
        horizon,
        rand_semilinear(rng, n).into(),
        rand_cost(rng, 2 * n),
        rand_set(rng, n),
        rand_set(rng, n),
    )
    .unwrap()
}

/// Point of `set` obtained by projecting a random point near it.
pub fn rand_member(rng: &mut ChaCha8Rng, set: &ConvexSet) -> Vector {
    let x = &set.center() + rand_vec(rng, set.dim(), 2.0);
    set.project(&x).unwrap().0
}

pub fn rand_trajectory(rng: &mut ChaCha8Rng, p: &DiscreteProblem) -> Trajectory {
    let map = p.semilinear().unwrap();
    let x0 = rand_member(rng, p.q0());
    let x1 = rand_member(rng, p.q1());
    let controls: Vec<Vector> = (0..p.horizon() - 1)
        .map(|_| rand_member(rng, map.control_set()))
        .collect();
    map.simulate(&x0, &x1, &controls).unwrap()
}
