mod common;

use common::*;
use incdual::discretization::{ContinuousProblem, MeshSpec};
use incdual::duality::DualVariables;
use incdual::io::{
    emit_dual, emit_problem, emit_trajectory, parse_dual, parse_problem, parse_trajectory,
    ContinuousSpec, ProblemSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn discrete_problems_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = ProblemSpec::Discrete(rand_problem(&mut rng, 3, 6));
        let text = emit_problem(&spec).unwrap();
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(emit_problem(&back).unwrap(), text);
    }

    #[test]
    fn continuous_problems_round_trip(seed in any::<u64>(), steps in prop::collection::vec(2usize..64, 0..5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let problem = ContinuousProblem::new(
            rand_semilinear(&mut rng, n),
            rand_cost(&mut rng, 2 * n),
            rand_set(&mut rng, n),
            rand_set(&mut rng, n),
        )
        .unwrap();
        let spec = ProblemSpec::Continuous(ContinuousSpec {
            problem,
            meshes: steps.iter().map(|&k| MeshSpec::from_steps(k).unwrap()).collect(),
            reference: rng.gen_bool(0.5).then(|| rng.gen_range(-2.0..2.0)),
        });
        let back = parse_problem(&emit_problem(&spec).unwrap()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn dual_and_trajectory_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rand_problem(&mut rng, 3, 6);
        let traj = rand_trajectory(&mut rng, &p);
        prop_assert_eq!(parse_trajectory(&emit_trajectory(&traj)).unwrap(), traj);
        let n = p.state_dim();
        let dv = DualVariables::new(
            (0..=p.horizon()).map(|_| rand_vec(&mut rng, n, 5.0)).collect(),
            (0..p.horizon()).map(|_| rand_vec(&mut rng, n, 5.0)).collect(),
        )
        .unwrap();
        prop_assert_eq!(parse_dual(&emit_dual(&dv)).unwrap(), dv);
    }
}

#[test]
fn shipped_problems_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.contains("_dual") {
            parse_dual(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        } else {
            let spec = parse_problem(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(parse_problem(&emit_problem(&spec).unwrap()).unwrap(), spec);
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
