use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{adjoint_recursion, DualSolution, SolveOptions};
use crate::convex::ExtReal;
use crate::duality::DualVariables;
use crate::error::{check_dim, Result};
use crate::inclusion::{DiscreteProblem, SemilinearMap};
use crate::{stack, Matrix, Vector};

/// Smallest pattern-search step before the polish stops.
const MIN_PATTERN_STEP: f64 = 1e-12;

/// Reduced dual objective at the seed `(x*_{N−1}, x*_N)`:
///
/// ```text
/// −φ*(A1ᵀx*_N − x*_{N−1}, −x*_N) − Σ_{t=0}^{N−2} W_U(Bᵀx*_{t+2})
///   − W_Q0(x*_0 − A1ᵀx*_1) − W_Q1(x*_1)
/// ```
///
/// with `x*_t` from the adjoint recursion.
pub fn reduced_dual_objective(
    p: &DiscreteProblem,
    seed_nm1: &Vector,
    seed_n: &Vector,
) -> Result<ExtReal> {
    let map = p.semilinear()?;
    let xs = adjoint_recursion(map.a0(), map.a1(), seed_nm1, seed_n, p.horizon())?;
    reduced_value(p, map, &xs)
}

fn reduced_value(p: &DiscreteProblem, map: &SemilinearMap, xs: &[Vector]) -> Result<ExtReal> {
    let k = p.horizon();
    let a1t = map.a1().transpose();
    let arg = stack(&[&(&a1t * &xs[k] - &xs[k - 1]), &(-&xs[k])]);
    let terminal = p.phi().conjugate(&arg)?;
    if terminal.is_pos_inf() {
        return Ok(ExtReal::NegInf);
    }
    let bt = map.b().transpose();
    let mut total = -terminal.to_f64();
    for x in &xs[2..] {
        total -= map.control_set().support(&(&bt * x))?;
    }
    total -= p.q0().support(&(&xs[0] - &a1t * &xs[1]))?;
    total -= p.q1().support(&xs[1])?;
    Ok(ExtReal::new(total))
}

/// Supergradient of the reduced objective with respect to the seed, or
/// `None` where the objective is `−∞`.
fn reduced_supergradient(
    p: &DiscreteProblem,
    map: &SemilinearMap,
    xs: &[Vector],
) -> Result<Option<Vector>> {
    let k = p.horizon();
    let n = map.state_dim();
    let a0 = map.a0();
    let a1 = map.a1();
    let a1t = a1.transpose();
    let arg = stack(&[&(&a1t * &xs[k] - &xs[k - 1]), &(-&xs[k])]);
    let Some(w) = p.phi().conjugate_argmax(&arg)? else {
        return Ok(None);
    };
    let wx = w.rows(0, n).into_owned();
    let wy = w.rows(n, n).into_owned();

    let mut adj = vec![Vector::zeros(n); k + 1];
    adj[k - 1] += &wx;
    adj[k] += wy - a1 * &wx;
    let bt = map.b().transpose();
    for t in 2..=k {
        let u = map.control_set().support_point(&(&bt * &xs[t]))?;
        adj[t] -= map.b() * u;
    }
    let q0_dir = &xs[0] - &a1t * &xs[1];
    let q0_pt = p.q0().support_point(&q0_dir)?;
    adj[0] -= &q0_pt;
    adj[1] += a1 * &q0_pt;
    adj[1] -= p.q1().support_point(&xs[1])?;

    // pull the adjoints of x*_0 … x*_{N−2} back to the seed
    for t in 0..k - 1 {
        let a = adj[t].clone();
        adj[t + 2] += a0 * &a;
        adj[t + 1] += a1 * &a;
    }
    Ok(Some(stack(&[&adj[k - 1], &adj[k]])))
}

/// Seed parametrization `s = s0 + Z·w` restricted to the affine hull of the
/// conjugate domain of `φ`.
pub(super) struct SeedSpace {
    origin: Vector,
    basis: Matrix,
}

impl SeedSpace {
    /// `None` when the hull is not reachable by any seed.
    pub(super) fn new(p: &DiscreteProblem, map: &SemilinearMap) -> Result<Option<Self>> {
        let n = map.state_dim();
        let dim = 2 * n;
        if let Some((c, _)) = p.phi().affine_parts() {
            // φ* is finite only at c: x*_N = −c_y, x*_{N−1} = A1ᵀx*_N − c_x
            let xn = -c.rows(n, n).into_owned();
            let xnm1 = map.a1().transpose() * &xn - c.rows(0, n);
            return Ok(Some(SeedSpace {
                origin: stack(&[&xnm1, &xn]),
                basis: Matrix::zeros(dim, 0),
            }));
        }
        let Some((hull, rhs)) = p.phi().conjugate_domain_hull()? else {
            return Ok(Some(SeedSpace {
                origin: Vector::zeros(dim),
                basis: Matrix::identity(dim, dim),
            }));
        };
        // terminal argument as a linear map of the seed
        let mut lin = Matrix::zeros(dim, dim);
        lin.view_mut((0, 0), (n, n))
            .copy_from(&(-Matrix::identity(n, n)));
        lin.view_mut((0, n), (n, n))
            .copy_from(&map.a1().transpose());
        lin.view_mut((n, n), (n, n))
            .copy_from(&(-Matrix::identity(n, n)));
        let k = hull * lin;
        let svd = k.clone().svd(true, true);
        let scale = svd.singular_values.amax().max(1.0);
        let eps = 1e-12 * scale;
        let origin = svd
            .solve(&rhs, eps)
            .map_err(|e| crate::Error::InvalidProblem(e.to_string()))?;
        if (&k * &origin - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            return Ok(None);
        }
        let v_t = svd.v_t.expect("requested V");
        let null: Vec<Vector> = (0..dim)
            .filter(|&i| i >= svd.singular_values.len() || svd.singular_values[i] <= eps)
            .map(|i| v_t.row(i).transpose())
            .collect();
        let basis = if null.is_empty() {
            Matrix::zeros(dim, 0)
        } else {
            Matrix::from_columns(&null)
        };
        Ok(Some(SeedSpace { origin, basis }))
    }

    pub(super) fn seed(&self, w: &Vector) -> Vector {
        &self.origin + &self.basis * w
    }

    pub(super) fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

struct Objective<'a> {
    p: &'a DiscreteProblem,
    map: &'a SemilinearMap,
    space: SeedSpace,
    evals: usize,
}

impl Objective<'_> {
    fn states(&self, w: &Vector) -> Result<Vec<Vector>> {
        let s = self.space.seed(w);
        let n = self.map.state_dim();
        adjoint_recursion(
            self.map.a0(),
            self.map.a1(),
            &s.rows(0, n).into_owned(),
            &s.rows(n, n).into_owned(),
            self.p.horizon(),
        )
    }

    fn value(&mut self, w: &Vector) -> Result<ExtReal> {
        self.evals += 1;
        let xs = self.states(w)?;
        reduced_value(self.p, self.map, &xs)
    }

    fn supergradient(&self, w: &Vector) -> Result<Option<Vector>> {
        let xs = self.states(w)?;
        Ok(reduced_supergradient(self.p, self.map, &xs)?.map(|g| self.space.basis.transpose() * g))
    }
}

/// Maximizes the reduced dual over the seed `(x*_{N−1}, x*_N)`.
///
/// The seed is first restricted to the affine hull of `dom φ*` (this pins it
/// completely for affine terminal costs). The remaining free directions are
/// searched by normalized supergradient ascent with steps `step0·R/√k` from
/// the origin and `restarts` random starts, rejecting steps into `φ* = +∞`,
/// and then polished by a compass pattern search.
pub fn solve_dual(p: &DiscreteProblem, opts: &SolveOptions) -> Result<DualSolution> {
    opts.validate()?;
    let map = p.semilinear()?;
    let n = map.state_dim();
    let Some(space) = SeedSpace::new(p, map)? else {
        return unbounded(p, map, 0);
    };
    let dim = space.dim();
    let mut obj = Objective {
        p,
        map,
        space,
        evals: 0,
    };
    let scale = opts.seed_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);

    let mut best: Option<(ExtReal, Vector)> = None;

    let starts = if dim == 0 { 1 } else { opts.restarts + 1 };
    for start in 0..starts {
        let mut w = if start == 0 {
            Vector::zeros(dim)
        } else {
            Vector::from_fn(dim, |_, _| rng.gen_range(-scale..=scale))
        };
        let v = obj.value(&w)?;
        consider(v, &w, &mut best);
        if !v.is_finite() || dim == 0 {
            continue;
        }
        for k in 1..=opts.max_iter {
            let Some(g) = obj.supergradient(&w)? else {
                break;
            };
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            let mut step = opts.step0 * scale / (k as f64).sqrt();
            let mut moved = false;
            for _ in 0..40 {
                let cand = &w + &g * (step / gn);
                let vc = obj.value(&cand)?;
                if vc.is_finite() {
                    w = cand;
                    consider(vc, &w, &mut best);
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }

    let Some((mut best_v, mut best_w)) = best else {
        return unbounded(p, map, obj.evals);
    };

    let mut converged = true;
    if dim > 0 {
        let dirs = pattern_directions(dim);
        let budget = obj.evals + opts.max_iter * dirs.len();
        let mut h = opts.step0;
        while h >= MIN_PATTERN_STEP {
            if obj.evals >= budget {
                converged = false;
                break;
            }
            let mut improved = false;
            for d in &dirs {
                let cand = &best_w + d * h;
                let vc = obj.value(&cand)?;
                if vc.is_finite() && vc > best_v {
                    best_v = vc;
                    best_w = cand;
                    improved = true;
                    break;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
    }

    let seed = obj.space.seed(&best_w);
    let dv = DualVariables::from_seed(
        map,
        p.horizon(),
        &seed.rows(0, n).into_owned(),
        &seed.rows(n, n).into_owned(),
    )?;
    check_dim("dual solution", p.horizon() + 1, dv.xstar.len())?;
    Ok(DualSolution {
        xstar: dv.xstar,
        mustar: dv.mustar,
        value: best_v,
        iterations: obj.evals,
        converged,
        domain_empty: false,
    })
}

fn consider(v: ExtReal, w: &Vector, best: &mut Option<(ExtReal, Vector)>) {
    if v.is_finite() && best.as_ref().is_none_or(|(bv, _)| v > *bv) {
        *best = Some((v, w.clone()));
    }
}

fn unbounded(p: &DiscreteProblem, map: &SemilinearMap, evals: usize) -> Result<DualSolution> {
    let n = map.state_dim();
    let dv = DualVariables::from_seed(map, p.horizon(), &Vector::zeros(n), &Vector::zeros(n))?;
    Ok(DualSolution {
        xstar: dv.xstar,
        mustar: dv.mustar,
        value: ExtReal::NegInf,
        iterations: evals,
        converged: false,
        domain_empty: true,
    })
}

/// `±e_i`, plus `±e_i ± e_j` for low dimensions so that kinks along
/// diagonals do not stall the search.
fn pattern_directions(dim: usize) -> Vec<Vector> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = Vector::zeros(dim);
            d[i] = sign;
            dirs.push(d);
        }
    }
    if dim <= 8 {
        for i in 0..dim {
            for j in i + 1..dim {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = Vector::zeros(dim);
                    d[i] = si;
                    d[j] = sj;
                    dirs.push(d);
                }
            }
        }
    }
    dirs
}
