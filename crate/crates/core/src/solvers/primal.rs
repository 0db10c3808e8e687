use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PrimalSolution, SolveOptions};
use crate::convex::{ConvexSet, ExtReal};
use crate::error::Result;
use crate::inclusion::{DiscreteProblem, SemilinearMap, Trajectory};
use crate::{stack, Vector};

/// Decision vector `(x0, x1, u_0, …, u_{N−2})` over `Q0 × Q1 × U^{N−1}` with
/// the states rebuilt by the recursion.
struct Layout<'a> {
    p: &'a DiscreteProblem,
    map: &'a SemilinearMap,
    n: usize,
    r: usize,
}

impl<'a> Layout<'a> {
    fn len(&self) -> usize {
        2 * self.n + self.r * (self.p.horizon() - 1)
    }

    fn control(&self, z: &Vector, t: usize) -> Vector {
        z.rows(2 * self.n + t * self.r, self.r).into_owned()
    }

    fn states(&self, z: &Vector) -> Vec<Vector> {
        let n = self.n;
        let mut xs = Vec::with_capacity(self.p.horizon() + 1);
        xs.push(z.rows(0, n).into_owned());
        xs.push(z.rows(n, n).into_owned());
        for t in 0..self.p.horizon() - 1 {
            let next = self.map.apply(&xs[t], &xs[t + 1], &self.control(z, t));
            xs.push(next);
        }
        xs
    }

    fn value(&self, z: &Vector) -> Result<f64> {
        let xs = self.states(z);
        let k = self.p.horizon();
        Ok(self.p.phi().eval(&stack(&[&xs[k - 1], &xs[k]]))?.to_f64())
    }

    /// Subgradient of `z ↦ φ(x_{N−1}, x_N)` by the backward adjoint sweep.
    fn gradient(&self, z: &Vector) -> Result<Vector> {
        let (n, r, k) = (self.n, self.r, self.p.horizon());
        let xs = self.states(z);
        let g = self.p.phi().subgradient(&stack(&[&xs[k - 1], &xs[k]]))?;
        let mut lambda = vec![Vector::zeros(n); k + 1];
        lambda[k - 1] = g.rows(0, n).into_owned();
        lambda[k] = g.rows(n, n).into_owned();
        let a0t = self.map.a0().transpose();
        let a1t = self.map.a1().transpose();
        let bt = self.map.b().transpose();
        let mut out = Vector::zeros(self.len());
        for t in (0..k - 1).rev() {
            let next = lambda[t + 2].clone();
            lambda[t] += &a0t * &next;
            lambda[t + 1] += &a1t * &next;
            out.rows_mut(2 * n + t * r, r).copy_from(&(&bt * &next));
        }
        out.rows_mut(0, n).copy_from(&lambda[0]);
        out.rows_mut(n, n).copy_from(&lambda[1]);
        Ok(out)
    }

    fn project(&self, z: &Vector) -> Result<Vector> {
        let (n, r) = (self.n, self.r);
        let mut out = z.clone();
        let blocks = [(self.p.q0(), 0, n), (self.p.q1(), n, n)];
        for (set, start, len) in blocks {
            let (pt, _) = set.project(&z.rows(start, len).into_owned())?;
            out.rows_mut(start, len).copy_from(&pt);
        }
        for t in 0..self.p.horizon() - 1 {
            let (pt, _) = self.map.control_set().project(&self.control(z, t))?;
            out.rows_mut(2 * n + t * r, r).copy_from(&pt);
        }
        Ok(out)
    }

    fn sets(&self) -> Vec<&'a ConvexSet> {
        let mut sets = vec![self.p.q0(), self.p.q1()];
        sets.extend(std::iter::repeat_n(
            self.map.control_set(),
            self.p.horizon() - 1,
        ));
        sets
    }

    fn center(&self) -> Vector {
        let parts: Vec<Vector> = self.sets().iter().map(|s| s.center()).collect();
        stack(&parts.iter().collect::<Vec<_>>())
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Result<Vector> {
        let parts: Vec<Vector> = self
            .sets()
            .iter()
            .map(|s| {
                let (lo, hi) = s.bounding_box();
                Vector::from_fn(lo.len(), |i, _| {
                    if hi[i] > lo[i] {
                        rng.gen_range(lo[i]..=hi[i])
                    } else {
                        lo[i]
                    }
                })
            })
            .collect();
        self.project(&stack(&parts.iter().collect::<Vec<_>>()))
    }

    fn diameter(&self) -> f64 {
        self.sets()
            .iter()
            .map(|s| s.diameter().powi(2))
            .sum::<f64>()
            .sqrt()
            .max(1.0)
    }

    fn stationarity(&self, z: &Vector) -> Result<f64> {
        let g = self.gradient(z)?;
        Ok((z - self.project(&(z - g))?).norm())
    }

    fn trajectory(&self, z: &Vector) -> Trajectory {
        Trajectory {
            states: self.states(z),
            controls: (0..self.p.horizon() - 1)
                .map(|t| self.control(z, t))
                .collect(),
        }
    }
}

/// Projected subgradient descent on `(x0, x1, u)` with normalized steps
/// `step0·D/√k` and best-iterate tracking, followed by a projected-gradient
/// polish with adaptive step from the best point.
///
/// Only semilinear maps are supported; tabulated maps go to
/// [`super::brute_primal`].
pub fn solve_primal(p: &DiscreteProblem, opts: &SolveOptions) -> Result<PrimalSolution> {
    opts.validate()?;
    let map = p.semilinear()?;
    let layout = Layout {
        p,
        map,
        n: map.state_dim(),
        r: map.control_dim(),
    };
    let scale = layout.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let mut iterations = 0;

    let mut best_z = layout.project(&layout.center())?;
    let mut best_f = layout.value(&best_z)?;
    for start in 0..=opts.restarts {
        let mut z = if start == 0 {
            best_z.clone()
        } else {
            layout.random_point(&mut rng)?
        };
        let mut fz = layout.value(&z)?;
        if fz < best_f {
            best_f = fz;
            best_z = z.clone();
        }
        for k in 1..=opts.max_iter {
            iterations += 1;
            let g = layout.gradient(&z)?;
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            let step = opts.step0 * scale / (k as f64).sqrt();
            z = layout.project(&(&z - g * (step / gn)))?;
            fz = layout.value(&z)?;
            if fz < best_f {
                best_f = fz;
                best_z = z.clone();
            }
        }
    }

    // polish: accepted steps double the step length, rejected ones halve it
    let mut z = best_z;
    let mut fz = best_f;
    let mut step = opts.step0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let g = layout.gradient(&z)?;
        if g.amax() == 0.0 {
            break;
        }
        let cand = layout.project(&(&z - &g * step))?;
        let fc = layout.value(&cand)?;
        if fc < fz {
            z = cand;
            fz = fc;
            step *= 2.0;
        } else {
            step *= 0.5;
            if step < 1e-14 * scale {
                break;
            }
        }
    }

    let stationarity = layout.stationarity(&z)?;
    Ok(PrimalSolution {
        trajectory: Some(layout.trajectory(&z)),
        value: ExtReal::new(fz),
        iterations,
        converged: stationarity <= opts.tol * (1.0 + fz.abs()),
        stationarity: Some(stationarity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFn;
    use crate::discretization::{build_pda, ContinuousProblem, MeshSpec};
    use crate::error::Error;
    use crate::inclusion::TabulatedMap;

    fn s(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    fn unit() -> ConvexSet {
        ConvexSet::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn worked_example() {
        let p = DiscreteProblem::new(
            2,
            SemilinearMap::scalar(1.0, 1.0, 1.0, unit()).unwrap().into(),
            ConvexFn::coordinate_select(2, vec![1]).unwrap(),
            ConvexSet::singleton(s(0.0)).unwrap(),
            ConvexSet::interval(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let sol = solve_primal(&p, &SolveOptions::default()).unwrap();
        assert!((sol.value.to_f64() + 1.0).abs() < 1e-9, "{:?}", sol.value);
        let traj = sol.trajectory.unwrap();
        assert_eq!(p.feasibility_violation(&traj).unwrap(), 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn quadratic_example() {
        let p = DiscreteProblem::new(
            3,
            SemilinearMap::scalar(0.0, 1.0, 1.0, unit()).unwrap().into(),
            ConvexFn::norm2sq(2),
            ConvexSet::singleton(s(1.0)).unwrap(),
            ConvexSet::singleton(s(1.0)).unwrap(),
        )
        .unwrap();
        let sol = solve_primal(&p, &SolveOptions::default()).unwrap();
        assert!(sol.value.to_f64().abs() < 1e-9, "{:?}", sol.value);
    }

    #[test]
    fn double_integrator_quarter() {
        let zero = ConvexSet::singleton(s(0.0)).unwrap();
        let cp = ContinuousProblem::new(
            SemilinearMap::scalar(0.0, 0.0, 1.0, unit()).unwrap(),
            ConvexFn::coordinate_select(2, vec![0]).unwrap(),
            zero.clone(),
            zero,
        )
        .unwrap();
        let p = build_pda(&cp, MeshSpec::from_steps(4).unwrap()).unwrap();
        let sol = solve_primal(&p, &SolveOptions::default()).unwrap();
        assert!(
            (sol.value.to_f64() + 0.1875).abs() < 1e-9,
            "{:?}",
            sol.value
        );
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = DiscreteProblem::new(
            4,
            SemilinearMap::scalar(0.3, -0.8, 1.0, unit())
                .unwrap()
                .into(),
            ConvexFn::norm1(2),
            ConvexSet::interval(-1.0, 2.0).unwrap(),
            ConvexSet::ball(s(0.5), 1.0).unwrap(),
        )
        .unwrap();
        let opts = SolveOptions {
            rng_seed: 7,
            max_iter: 300,
            ..SolveOptions::default()
        };
        assert_eq!(
            solve_primal(&p, &opts).unwrap(),
            solve_primal(&p, &opts).unwrap()
        );
    }

    #[test]
    fn tabulated_is_rejected() {
        let p = DiscreteProblem::new(
            2,
            TabulatedMap::scalar(&[(0.0, 0.0, 0.0)]).unwrap().into(),
            ConvexFn::coordinate_select(2, vec![1]).unwrap(),
            ConvexSet::singleton(s(0.0)).unwrap(),
            ConvexSet::singleton(s(0.0)).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            solve_primal(&p, &SolveOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
