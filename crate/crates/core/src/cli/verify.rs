//! Property checks on a built tree: completeness by backward rollouts,
//! soundness by solving the footstep program from every node, and
//! equivalence of merged and un-merged layers by sampled membership.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::footstep::{assemble_problem, solve, Objective, SolveStatus};
use crate::geometry::{chebyshev_center, rotation_to_normal, Point3, Polytope};
use crate::planner::{build_tree, BuildError, BuildOptions, FeasibilityTree, Node, NodeId};
use crate::query::extract_plan;
use crate::scene::{Effector, ProblemInstance};

use super::sample::point_in;

/// Sampled predecessors must clear every reach facet by this much, so the
/// check is not decided by boundary tolerance.
const ROLLOUT_MARGIN: f64 = 1e-6;
const ROLLOUT_TRIES: usize = 400;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutReport {
    pub rollouts: usize,
    /// Sampled positions checked against the tree.
    pub checks: usize,
    /// `(depth, effector, point)` of positions no node contained.
    pub misses: Vec<(usize, Effector, Point3)>,
}

/// Random feasible step sequences walked backward from the goal. The
/// position reached after `i` steps must lie in some node of layer `i`.
pub fn rollouts(tree: &FeasibilityTree, instance: &ProblemInstance, count: usize, seed: u64) -> RolloutReport {
    let depth = tree.num_layers() - 1;
    let per: Vec<RolloutReport> = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            one_rollout(tree, instance, depth, &mut rng)
        })
        .collect();
    let mut report = RolloutReport { rollouts: count, ..Default::default() };
    for r in per {
        report.checks += r.checks;
        report.misses.extend(r.misses);
    }
    report
}

fn one_rollout(tree: &FeasibilityTree, inst: &ProblemInstance, depth: usize, rng: &mut ChaCha8Rng) -> RolloutReport {
    let mut report = RolloutReport::default();
    let mut p = point_in(&tree.root().region, rng);
    let mut effector = tree.root().effector;
    let mut normal = *tree.root().region.normal();
    for i in 1..=depth {
        // positions of the other foot from which `effector` reaches p
        let q = rotation_to_normal(&normal).expect("unit normal");
        let ante = inst.kinematics.antecedent(effector).rotated(&q);
        let Some((prev, surface_normal)) = predecessor(inst, &ante, &p, rng) else {
            break;
        };
        effector = effector.other();
        report.checks += 1;
        let layer = tree.layer(i);
        if !layer.iter().any(|n| n.is_valid() && n.effector == effector && n.region.contains(&prev)) {
            report.misses.push((i, effector, prev));
        }
        p = prev;
        normal = surface_normal;
    }
    report
}

fn predecessor(
    inst: &ProblemInstance,
    ante: &Polytope,
    p: &Point3,
    rng: &mut ChaCha8Rng,
) -> Option<(Point3, nalgebra::Vector3<f64>)> {
    let (lo, hi) = ante.bounds();
    let (lo, hi) = (lo + p, hi + p);
    let near: Vec<usize> = inst
        .scene
        .surfaces
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let (a, b) = s.polygon.bounds();
            (0..3).all(|k| a[k] <= hi[k] && lo[k] <= b[k])
        })
        .map(|(i, _)| i)
        .collect();
    if near.is_empty() {
        return None;
    }
    for _ in 0..ROLLOUT_TRIES {
        let s = &inst.scene.surfaces[near[rng.random_range(0..near.len())]];
        let cand = point_in(&s.polygon, rng);
        let d = cand - p;
        if ante.facets().iter().all(|h| h.excess(&d) <= -ROLLOUT_MARGIN) {
            return Some((cand, *s.polygon.normal()));
        }
    }
    None
}

enum Check {
    Skipped,
    Pass(f64),
    Fail(f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoundnessReport {
    pub checked: usize,
    pub max_violation: f64,
    /// Nodes whose plan was not solved as feasible, with the violation.
    pub failures: Vec<(NodeId, f64)>,
}

/// Solves the feasibility program from the Chebyshev center of every valid
/// non-root node along its extracted plan.
pub fn soundness(tree: &FeasibilityTree, instance: &ProblemInstance) -> SoundnessReport {
    let nodes: Vec<&Node> = tree.nodes().iter().filter(|n| n.is_valid() && !n.is_root()).collect();
    let results: Vec<(NodeId, Check)> = nodes
        .par_iter()
        .map(|n| {
            // a node cut off by invalidation has no plan to check
            let Ok(plan) = extract_plan(tree, n.id) else {
                return (n.id, Check::Skipped);
            };
            let p0 = chebyshev_center(&n.region);
            let check = match assemble_problem(&plan, &p0, plan.steps(), Objective::Feasibility, &instance.kinematics) {
                Ok(prob) => {
                    let sol = solve(&prob);
                    if sol.status == SolveStatus::Feasible {
                        Check::Pass(sol.max_violation)
                    } else {
                        Check::Fail(sol.max_violation)
                    }
                }
                Err(_) => Check::Fail(f64::INFINITY),
            };
            (n.id, check)
        })
        .collect();
    let mut report = SoundnessReport::default();
    for (id, check) in results {
        match check {
            Check::Skipped => {}
            Check::Pass(v) => {
                report.checked += 1;
                report.max_violation = report.max_violation.max(v);
            }
            Check::Fail(v) => {
                report.checked += 1;
                report.max_violation = report.max_violation.max(v);
                report.failures.push((id, v));
            }
        }
    }
    report
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeutralityReport {
    /// Layers compared (the un-merged build may stop earlier on its budget).
    pub layers: usize,
    pub points: usize,
    pub mismatches: Vec<(usize, Point3)>,
}

/// Rebuilds `instance` without merging (as deep as `budget` allows) and
/// checks that each merged layer covers the same set as the un-merged one.
/// Half the sample points come from merged regions, half from un-merged.
pub fn merge_neutrality(
    merged: &FeasibilityTree,
    instance: &ProblemInstance,
    points_per_layer: usize,
    budget: usize,
    seed: u64,
) -> NeutralityReport {
    let mut inst = instance.clone();
    inst.max_steps = merged.num_layers() - 1;
    let raw = loop {
        match build_tree(&inst, &BuildOptions { merge: false, node_budget: budget, ..Default::default() }) {
            Ok(t) => break t,
            Err(BuildError::NodeBudget { depth, .. }) => inst.max_steps = depth - 1,
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NeutralityReport { layers: raw.num_layers(), ..Default::default() };
    let covered = |layer: &[Node], p: &Point3| layer.iter().any(|n| n.is_valid() && n.region.contains(p));
    for k in 0..raw.num_layers() {
        let (a, b) = (merged.layer(k), raw.layer(k));
        if a.is_empty() && b.is_empty() {
            continue;
        }
        for i in 0..points_per_layer {
            let src = if (i % 2 == 0 && !a.is_empty()) || b.is_empty() { a } else { b };
            let p = point_in(&src[rng.random_range(0..src.len())].region, &mut rng);
            report.points += 1;
            if covered(a, &p) != covered(b, &p) {
                report.mismatches.push((k, p));
            }
        }
    }
    report
}

/// Nodes with an all-valid chain to the root, computed layer by layer from
/// the goal. Independent of the search in `replan`.
pub fn alive_nodes(tree: &FeasibilityTree) -> Vec<bool> {
    let mut alive = vec![false; tree.len()];
    for n in tree.nodes() {
        alive[n.id as usize] = n.is_valid() && (n.is_root() || n.parents.iter().any(|&p| alive[p as usize]));
    }
    alive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::bench::{family_instance, Family};

    fn small() -> (FeasibilityTree, ProblemInstance) {
        let inst = family_instance(Family::Stones, 6, 8).unwrap();
        (build_tree(&inst, &BuildOptions::default()).unwrap(), inst)
    }

    #[test]
    fn fresh_tree_passes_everything() {
        let (tree, inst) = small();
        let r = rollouts(&tree, &inst, 100, 1);
        assert!(r.misses.is_empty(), "{:?}", r.misses);
        assert!(r.checks > 300);
        let s = soundness(&tree, &inst);
        assert_eq!(s.checked, tree.len() - 1);
        assert!(s.failures.is_empty());
        let m = merge_neutrality(&tree, &inst, 200, 50_000, 3);
        assert!(m.layers >= 5);
        assert!(m.mismatches.is_empty());
    }

    #[test]
    fn truncated_tree_misses_deep_positions() {
        let (tree, inst) = small();
        let mut cut = tree.truncated(4);
        for id in cut.layer(3).iter().map(|n| n.id).collect::<Vec<_>>() {
            cut.set_valid(id, false);
        }
        let r = rollouts(&cut, &inst, 50, 1);
        assert!(!r.misses.is_empty());
        assert!(r.misses.iter().all(|(d, _, _)| *d == 3));
    }

    #[test]
    fn alive_follows_invalidation() {
        let (mut tree, _) = small();
        assert!(alive_nodes(&tree).iter().all(|a| *a));
        tree.set_valid(0, false);
        assert!(alive_nodes(&tree).iter().all(|a| !*a));
    }
}
