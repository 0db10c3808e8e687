mod common;

use common::*;
use incdual::convex::{ConvexSet, ExtReal};
use incdual::discretization::{build_pda, g_map, MeshSpec};
use incdual::duality::{certify, dual_objective, nondegeneracy_probe, Check, DualVariables};
use incdual::inclusion::{DiscreteProblem, InclusionMap};
use incdual::io::sweep;
use incdual::solvers::{
    brute_dual, brute_primal, reduced_dual_objective, solve_dual, solve_primal, SolveOptions,
};
use incdual::Vector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fast() -> SolveOptions {
    SolveOptions {
        max_iter: 400,
        restarts: 1,
        ..SolveOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn m_function_is_positively_homogeneous(seed in any::<u64>(), lambda in 0.01f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let f: InclusionMap = rand_semilinear(&mut rng, n).into();
        let zs = rand_vec(&mut rng, n, 2.0);
        let m = f.as_semilinear().unwrap();
        let (xs, ys) = (m.a0().transpose() * &zs, m.a1().transpose() * &zs);
        let base = f.m_function(&xs, &ys, &zs).unwrap();
        let scaled = f.m_function(&(&xs * lambda), &(&ys * lambda), &(&zs * lambda)).unwrap();
        prop_assert!(base.is_finite());
        prop_assert!((scaled.to_f64() - lambda * base.to_f64()).abs() <= 1e-9 * (1.0 + base.to_f64().abs()));
        let off = f.m_function(&(&xs + Vector::from_element(n, 0.5)), &ys, &zs).unwrap();
        prop_assert_eq!(off, ExtReal::NegInf);
    }

    #[test]
    fn hamiltonian_is_concave_and_attained(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let f: InclusionMap = rand_semilinear(&mut rng, n).into();
        let (x1, y1, x2, y2) = (rand_vec(&mut rng, n, 2.0), rand_vec(&mut rng, n, 2.0), rand_vec(&mut rng, n, 2.0), rand_vec(&mut rng, n, 2.0));
        let zs = rand_vec(&mut rng, n, 2.0);
        let h = |x: &Vector, y: &Vector| f.hamiltonian(x, y, &zs).unwrap().to_f64();
        let mid = h(&(&x1 * t + &x2 * (1.0 - t)), &(&y1 * t + &y2 * (1.0 - t)));
        prop_assert!(mid >= t * h(&x1, &y1) + (1.0 - t) * h(&x2, &y2) - 1e-9);
        let z = f.argmax_rep(&x1, &y1, &zs).unwrap();
        prop_assert!((z.dot(&zs) - h(&x1, &y1)).abs() <= 1e-9);
    }

    #[test]
    fn m_function_lower_bounds_graph_pairing(seed in any::<u64>()) {
        // M_F(x*, y*, z*) ≤ ⟨x, x*⟩ + ⟨y, y*⟩ − H_F(x, y, z*) for every (x, y)
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let f: InclusionMap = rand_semilinear(&mut rng, n).into();
        let zs = rand_vec(&mut rng, n, 2.0);
        let m = f.as_semilinear().unwrap();
        let (xs, ys) = (m.a0().transpose() * &zs, m.a1().transpose() * &zs);
        let mv = f.m_function(&xs, &ys, &zs).unwrap().to_f64();
        for _ in 0..10 {
            let (x, y) = (rand_vec(&mut rng, n, 3.0), rand_vec(&mut rng, n, 3.0));
            let rhs = x.dot(&xs) + y.dot(&ys) - f.hamiltonian(&x, &y, &zs).unwrap().to_f64();
            prop_assert!(mv <= rhs + 1e-9);
        }
    }

    #[test]
    fn mesh_map_carries_graph_points(seed in any::<u64>(), k in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let delta = 1.0 / k as f64;
        let m = rand_semilinear(&mut rng, n);
        let g = g_map(&m.clone().into(), delta).unwrap();
        let gm = g.as_semilinear().unwrap();
        let (x, w) = (rand_vec(&mut rng, n, 2.0), rand_vec(&mut rng, n, 2.0));
        let u = rand_member(&mut rng, m.control_set());
        let z = m.apply(&x, &w, &u);
        let y = &x + &w * delta;
        let expect = &y * 2.0 - &x + &z * (delta * delta);
        prop_assert!((gm.apply(&x, &y, &u) - expect).amax() <= 1e-12);
    }

    #[test]
    fn reduced_and_full_dual_objectives_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rand_problem(&mut rng, 2, 5);
        let n = p.state_dim();
        let (a, b) = (rand_vec(&mut rng, n, 1.5), rand_vec(&mut rng, n, 1.5));
        let dv = DualVariables::from_seed(p.semilinear().unwrap(), p.horizon(), &a, &b).unwrap();
        let full = dual_objective(&p, &dv).unwrap();
        let reduced = reduced_dual_objective(&p, &a, &b).unwrap();
        match (full, reduced) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs())),
            _ => prop_assert_eq!(full, reduced),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solved_dual_never_exceeds_solved_primal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rand_problem(&mut rng, 2, 4);
        let primal = solve_primal(&p, &fast()).unwrap();
        let dual = solve_dual(&p, &fast()).unwrap();
        let traj = primal.trajectory.as_ref().unwrap();
        prop_assert!(p.feasibility_violation(traj).unwrap() <= 1e-7);
        prop_assert!(dual.value <= primal.value.checked_add(ExtReal::new(1e-9)).unwrap());
        let rep = certify(&p, &primal, &dual.to_dual_variables(), 1e-8).unwrap();
        if rep.passed() {
            prop_assert!(rep.gap.to_f64().abs() <= 1e-6, "{rep}");
        }
    }

    #[test]
    fn primal_grid_refinement_is_monotone(seed in any::<u64>(), res in 2usize..=6) {
        // boxes and singletons give nested grids under r ↦ 2r − 1
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let boxed = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(-1.0..=1.0);
            if rng.gen_bool(0.3) {
                ConvexSet::singleton(s(a)).unwrap()
            } else {
                ConvexSet::interval(a, a + rng.gen_range(0.1..=2.0)).unwrap()
            }
        };
        let map = incdual::inclusion::SemilinearMap::scalar(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            boxed(&mut rng),
        )
        .unwrap();
        let p = DiscreteProblem::new(
            rng.gen_range(2..=3),
            map.into(),
            rand_cost(&mut rng, 2),
            boxed(&mut rng),
            boxed(&mut rng),
        )
        .unwrap();
        let at = |r: usize| {
            brute_primal(&p, &SolveOptions { grid_resolution: r, ..SolveOptions::default() })
                .unwrap()
                .value
        };
        prop_assert!(at(2 * res - 1) <= at(res));
    }

    #[test]
    fn grid_dual_is_a_lower_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rand_problem(&mut rng, 1, 3);
        let opts = SolveOptions { grid_resolution: 21, ..fast() };
        let grid = brute_dual(&p, &opts).unwrap();
        let primal = solve_primal(&p, &fast()).unwrap();
        prop_assert!(grid.value <= primal.value.checked_add(ExtReal::new(1e-9)).unwrap());
    }
}

#[test]
fn solvers_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..4 {
        let p = rand_problem(&mut rng, 2, 4);
        let opts = SolveOptions {
            rng_seed: 5,
            ..fast()
        };
        assert_eq!(
            solve_primal(&p, &opts).unwrap(),
            solve_primal(&p, &opts).unwrap()
        );
        assert_eq!(
            solve_dual(&p, &opts).unwrap(),
            solve_dual(&p, &opts).unwrap()
        );
    }
    let spec = double_integrator_spec(&[4, 8]);
    let a = sweep(&spec, &fast(), 1e-8).unwrap();
    let b = sweep(&spec, &fast(), 1e-8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn double_integrator_dual_has_linear_adjoint() {
    // x*(t) = t − 1 on the scaled grid, v* ≡ 0
    let cp = double_integrator();
    for k in [4usize, 8] {
        let mesh = MeshSpec::from_steps(k).unwrap();
        let p = build_pda(&cp, mesh).unwrap();
        let dual = solve_dual(&p, &SolveOptions::default()).unwrap();
        let delta = mesh.delta();
        assert!((dual.value.to_f64() - double_integrator_value(delta)).abs() < 1e-9);
        for (i, x) in dual.xstar.iter().enumerate() {
            let t = i as f64 * delta;
            assert!((x[0] * delta - (t - 1.0)).abs() < 1e-9, "x*_{i} = {}", x[0]);
        }
    }
}

#[test]
fn probe_flags_degenerate_instances() {
    let rep = nondegeneracy_probe(&worked()).unwrap();
    assert_eq!(rep.item("Q0").unwrap().status, Check::Warn);
    assert_eq!(rep.item("Q1").unwrap().status, Check::Pass);
    let rep = nondegeneracy_probe(&quadratic()).unwrap();
    assert!(rep.overall() >= Check::Warn);
}
