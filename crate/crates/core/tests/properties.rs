use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nasplan::cli::bench::{family_instance, Family};
use nasplan::cli::sample::point_in;
use nasplan::footstep::{assemble_problem, max_violation, solve, Objective, SolveStatus};
use nasplan::geometry::{convex_hull, minkowski_sum, Point3, EPS_GEO};
use nasplan::planner::{build_tree, BuildOptions, FeasibilityTree};
use nasplan::query::{build_index, extract_plan, find_nodes, SpatialIndex};
use nasplan::scene::ProblemInstance;

struct Fixture {
    inst: ProblemInstance,
    tree: FeasibilityTree,
    index: SpatialIndex,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let inst = family_instance(Family::Staircase, 8, 10).unwrap();
        let tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        let index = build_index(&tree);
        Fixture { inst, tree, index }
    })
}

fn coord() -> impl Strategy<Value = f64> {
    -0.5..0.5f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_region_points_are_found(node in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let f = fixture();
        let n = &f.tree.nodes()[node.index(f.tree.len())];
        let p = point_in(&n.region, &mut ChaCha8Rng::seed_from_u64(seed));
        let hits = find_nodes(&f.tree, &f.index, &p, n.effector);
        prop_assert!(hits.contains(&n.id));
        let mut scan = f.tree.scan(&p, n.effector);
        let mut sorted = hits.clone();
        scan.sort_unstable();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, scan);
        let depths: Vec<u32> = hits.iter().map(|&id| f.tree.node(id).unwrap().depth).collect();
        prop_assert!(depths.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn plans_descend_to_the_goal(node in any::<prop::sample::Index>()) {
        let f = fixture();
        let n = &f.tree.nodes()[node.index(f.tree.len())];
        let plan = extract_plan(&f.tree, n.id).unwrap();
        prop_assert_eq!(plan.steps(), n.depth as usize);
        prop_assert_eq!(plan.entries.last().unwrap().node, f.tree.root().id);
        for w in plan.entries.windows(2) {
            let child = f.tree.node(w[0].node).unwrap();
            prop_assert!(child.parents.contains(&w[1].node));
            prop_assert_ne!(w[0].effector, w[1].effector);
        }
    }

    #[test]
    fn footsteps_from_any_region_point_are_feasible(node in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let f = fixture();
        let n = &f.tree.nodes()[node.index(f.tree.len())];
        prop_assume!(n.depth > 0);
        let p = point_in(&n.region, &mut ChaCha8Rng::seed_from_u64(seed));
        let plan = extract_plan(&f.tree, n.id).unwrap();
        let prob = assemble_problem(&plan, &p, plan.steps(), Objective::Feasibility, &f.inst.kinematics).unwrap();
        let sol = solve(&prob);
        prop_assert_eq!(sol.status, SolveStatus::Feasible);
        prop_assert!(max_violation(&prob, &sol.positions) <= 1e-8);
    }

    #[test]
    fn minkowski_sum_contains_pairwise_sums(
        a in prop::collection::vec((coord(), coord(), coord()), 4..10),
        b in prop::collection::vec((coord(), coord(), coord()), 4..10),
        wa in prop::collection::vec(0.0..1.0f64, 10),
        wb in prop::collection::vec(0.0..1.0f64, 10),
    ) {
        let pa: Vec<Point3> = a.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
        let pb: Vec<Point3> = b.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
        let (ha, hb) = (convex_hull(&pa).unwrap(), convex_hull(&pb).unwrap());
        let s = minkowski_sum(&ha, &hb);
        // convex combinations of the inputs
        let mix = |pts: &[Point3], w: &[f64]| {
            let total: f64 = w[..pts.len()].iter().sum::<f64>() + 1e-12;
            pts.iter().zip(w).fold(Point3::zeros(), |acc, (p, wi)| acc + p * (*wi / total))
        };
        let q = mix(&pa, &wa) + mix(&pb, &wb);
        prop_assert!(s.facets().iter().all(|h| h.excess(&q) <= EPS_GEO));
    }
}
