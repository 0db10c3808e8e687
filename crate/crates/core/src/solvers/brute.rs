use super::dual::SeedSpace;
use super::{DualSolution, PrimalSolution, SolveOptions};
use crate::convex::set::{axis_points, cartesian};
use crate::convex::{ExtReal, MEMBERSHIP_TOL};
use crate::duality::{dual_objective, DualVariables};
use crate::error::{Error, Result};
use crate::inclusion::{
    DiscreteProblem, InclusionMap, SemilinearMap, TabulatedMap, Trajectory, TABLE_TOL,
};
use crate::{stack, Vector};

/// Maximum number of grid points (or chains) an oracle may enumerate.
pub const GRID_BUDGET: f64 = 1e7;

fn check_budget(points: f64) -> Result<()> {
    if points > GRID_BUDGET {
        return Err(Error::BudgetExceeded {
            points,
            limit: GRID_BUDGET,
        });
    }
    Ok(())
}

/// Exhaustive enumeration: grid points of `Q0 × Q1 × U^{N−1}` for semilinear
/// maps, listed triple chains for tabulated maps. An empty chain set gives
/// value `+∞` and no trajectory.
pub fn brute_primal(p: &DiscreteProblem, opts: &SolveOptions) -> Result<PrimalSolution> {
    opts.validate()?;
    match p.map() {
        InclusionMap::Semilinear(m) => brute_semilinear(p, m, opts.grid_resolution),
        InclusionMap::Tabulated(m) => brute_chains(p, m),
    }
}

/// Upper bound on the number of points [`brute_primal`] enumerates at the
/// given resolution.
pub fn primal_grid_size(p: &DiscreteProblem, res: usize) -> f64 {
    match p.map() {
        InclusionMap::Semilinear(m) => {
            p.q0().grid_size_bound(res)
                * p.q1().grid_size_bound(res)
                * m.control_set()
                    .grid_size_bound(res)
                    .powi(p.horizon() as i32 - 1)
        }
        InclusionMap::Tabulated(m) => (m.triples().len() as f64).powi(p.horizon() as i32 - 1),
    }
}

fn brute_semilinear(
    p: &DiscreteProblem,
    map: &SemilinearMap,
    res: usize,
) -> Result<PrimalSolution> {
    let steps = p.horizon() - 1;
    let u = map.control_set();
    check_budget(primal_grid_size(p, res))?;
    let g0 = p.q0().grid(res)?;
    let g1 = p.q1().grid(res)?;
    let gu = u.grid(res)?;
    let total = g0.len() as f64 * g1.len() as f64 * (gu.len() as f64).powi(steps as i32);
    if total == 0.0 {
        return Err(Error::EmptyGrid);
    }

    let mut search = ControlSearch {
        p,
        map,
        gu: &gu,
        states: Vec::with_capacity(p.horizon() + 1),
        controls: Vec::with_capacity(steps),
        best: None,
        count: 0,
    };
    for x0 in &g0 {
        for x1 in &g1 {
            search.states.clear();
            search.states.push(x0.clone());
            search.states.push(x1.clone());
            search.run()?;
        }
    }
    let count = search.count;
    let (value, traj) = search
        .best
        .expect("nonempty grids give at least one trajectory");
    Ok(PrimalSolution {
        trajectory: Some(traj),
        value: ExtReal::new(value),
        iterations: count,
        converged: true,
        stationarity: None,
    })
}

struct ControlSearch<'a> {
    p: &'a DiscreteProblem,
    map: &'a SemilinearMap,
    gu: &'a [Vector],
    states: Vec<Vector>,
    controls: Vec<Vector>,
    best: Option<(f64, Trajectory)>,
    count: usize,
}

impl ControlSearch<'_> {
    fn run(&mut self) -> Result<()> {
        let k = self.p.horizon();
        if self.states.len() == k + 1 {
            self.count += 1;
            let v = self
                .p
                .phi()
                .eval(&stack(&[&self.states[k - 1], &self.states[k]]))?
                .to_f64();
            if self.best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                self.best = Some((
                    v,
                    Trajectory {
                        states: self.states.clone(),
                        controls: self.controls.clone(),
                    },
                ));
            }
            return Ok(());
        }
        let t = self.states.len() - 2;
        for u in self.gu {
            let next = self.map.apply(&self.states[t], &self.states[t + 1], u);
            self.states.push(next);
            self.controls.push(u.clone());
            self.run()?;
            self.states.pop();
            self.controls.pop();
        }
        Ok(())
    }
}

fn brute_chains(p: &DiscreteProblem, map: &TabulatedMap) -> Result<PrimalSolution> {
    let k = p.horizon();
    let mut best: Option<(f64, Vec<Vector>)> = None;
    let mut count = 0usize;
    let mut stack_: Vec<Vec<Vector>> = Vec::new();
    for t in map.triples() {
        if p.q0().contains(&t.x, MEMBERSHIP_TOL)? && p.q1().contains(&t.y, MEMBERSHIP_TOL)? {
            stack_.push(vec![t.x.clone(), t.y.clone(), t.z.clone()]);
        }
    }
    while let Some(chain) = stack_.pop() {
        if chain.len() == k + 1 {
            count += 1;
            check_budget(count as f64)?;
            let v = p.phi().eval(&stack(&[&chain[k - 1], &chain[k]]))?.to_f64();
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, chain));
            }
            continue;
        }
        let (x, y) = (&chain[chain.len() - 2], &chain[chain.len() - 1]);
        for t in map.triples() {
            if (&t.x - x).amax() <= TABLE_TOL && (&t.y - y).amax() <= TABLE_TOL {
                let mut next = chain.clone();
                next.push(t.z.clone());
                stack_.push(next);
            }
        }
    }
    Ok(match best {
        Some((v, states)) => PrimalSolution {
            trajectory: Some(Trajectory {
                states,
                controls: Vec::new(),
            }),
            value: ExtReal::new(v),
            iterations: count,
            converged: true,
            stationarity: None,
        },
        None => PrimalSolution {
            trajectory: None,
            value: ExtReal::PosInf,
            iterations: 0,
            converged: true,
            stationarity: None,
        },
    })
}

/// Grid search of the dual objective over seeds `(x*_{N−1}, x*_N)` in the
/// box `center ± radius` with `res` points per coordinate. Returns the best
/// seed, its value and the number of evaluations. Ties keep the first point
/// in enumeration order.
pub fn dual_grid_search(
    p: &DiscreteProblem,
    center: &Vector,
    radius: f64,
    res: usize,
) -> Result<(Vector, ExtReal, usize)> {
    let map = p.semilinear()?;
    let n = map.state_dim();
    let dim = 2 * n;
    crate::error::check_dim("seed box center", dim, center.len())?;
    check_budget((res as f64).powi(dim as i32))?;
    let axes = (0..dim)
        .map(|i| axis_points(center[i] - radius, center[i] + radius, res))
        .collect();
    let mut best: Option<(Vector, ExtReal)> = None;
    let mut count = 0;
    for seed in cartesian(axes) {
        count += 1;
        let v = seed_value(p, map, &seed)?;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((seed, v));
        }
    }
    let (seed, v) = best.ok_or(Error::EmptyGrid)?;
    Ok((seed, v, count))
}

fn seed_value(p: &DiscreteProblem, map: &SemilinearMap, seed: &Vector) -> Result<ExtReal> {
    let n = map.state_dim();
    let dv = DualVariables::from_seed(
        map,
        p.horizon(),
        &seed.rows(0, n).into_owned(),
        &seed.rows(n, n).into_owned(),
    )?;
    dual_objective(p, &dv)
}

/// Grid search over seeds `s = s₀ + Vw` restricted to the affine hull of
/// `dom φ*`, with `w ∈ [−R, R]^d` (`R = seed_radius`), refined once on a grid
/// of the same resolution around the best cell. Requires `n ≤ 2`. The dual
/// is evaluated through the full objective, not the reduced formula.
pub fn brute_dual(p: &DiscreteProblem, opts: &SolveOptions) -> Result<DualSolution> {
    opts.validate()?;
    let map = p.semilinear()?;
    let n = map.state_dim();
    if n > 2 {
        return Err(Error::Unsupported(format!(
            "dual grid oracle needs state dimension <= 2, got {n}"
        )));
    }
    let empty = |count| {
        let dv = DualVariables::zeros(n, p.horizon());
        DualSolution {
            xstar: dv.xstar,
            mustar: dv.mustar,
            value: ExtReal::NegInf,
            iterations: count,
            converged: false,
            domain_empty: true,
        }
    };
    let Some(space) = SeedSpace::new(p, map)? else {
        return Ok(empty(0));
    };
    let res = opts.grid_resolution.max(2);
    let radius = opts.seed_radius;
    let dim = space.dim();
    let (w, value, c1) = space_grid_search(p, map, &space, &Vector::zeros(dim), radius, res)?;
    let (w, value, c2) = if value.is_finite() && dim > 0 {
        let cell = 2.0 * radius / (res - 1) as f64;
        let (w2, v2, c2) = space_grid_search(p, map, &space, &w, cell, res)?;
        if v2 > value {
            (w2, v2, c2)
        } else {
            (w, value, c2)
        }
    } else {
        (w, value, 0)
    };
    if value.is_neg_inf() {
        return Ok(empty(c1 + c2));
    }
    let seed = space.seed(&w);
    let dv = DualVariables::from_seed(
        map,
        p.horizon(),
        &seed.rows(0, n).into_owned(),
        &seed.rows(n, n).into_owned(),
    )?;
    Ok(DualSolution {
        xstar: dv.xstar,
        mustar: dv.mustar,
        value,
        iterations: c1 + c2,
        converged: true,
        domain_empty: false,
    })
}

fn space_grid_search(
    p: &DiscreteProblem,
    map: &SemilinearMap,
    space: &SeedSpace,
    center: &Vector,
    radius: f64,
    res: usize,
) -> Result<(Vector, ExtReal, usize)> {
    let dim = space.dim();
    if dim == 0 {
        return Ok((
            Vector::zeros(0),
            seed_value(p, map, &space.seed(center))?,
            1,
        ));
    }
    check_budget((res as f64).powi(dim as i32))?;
    let axes = (0..dim)
        .map(|i| axis_points(center[i] - radius, center[i] + radius, res))
        .collect();
    let mut best: Option<(Vector, ExtReal)> = None;
    let mut count = 0;
    for w in cartesian(axes) {
        count += 1;
        let v = seed_value(p, map, &space.seed(&w))?;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((w, v));
        }
    }
    let (w, v) = best.ok_or(Error::EmptyGrid)?;
    Ok((w, v, count))
}
