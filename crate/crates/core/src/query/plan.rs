use crate::geometry::Point3;
use crate::planner::{FeasibilityTree, Node, NodeId};
use crate::scene::{Effector, Scene, SurfaceId};

use super::{find_nodes, PlanEntry, QueryError, SpatialIndex, SurfacePlan};

fn entry(tree: &FeasibilityTree, n: &Node) -> PlanEntry {
    PlanEntry {
        node: n.id,
        effector: n.effector,
        surface_id: n.surface_id,
        yaw: tree.yaw_of(n),
        region: n.region.clone(),
    }
}

fn plan_of(tree: &FeasibilityTree, chain: &[NodeId]) -> SurfacePlan {
    SurfacePlan { entries: chain.iter().map(|&id| entry(tree, &tree.nodes()[id as usize])).collect() }
}

/// Walks from `node` to the goal, taking the lowest-id valid parent at each
/// level. Does not backtrack.
pub fn extract_plan(tree: &FeasibilityTree, node: NodeId) -> Result<SurfacePlan, QueryError> {
    let mut current = tree.node(node).ok_or(QueryError::UnknownNode(node))?;
    if !current.is_valid() {
        return Err(QueryError::InvalidNode(node));
    }
    let mut chain = vec![current.id];
    while !current.is_root() {
        let next = current
            .parents
            .iter()
            .map(|&p| &tree.nodes()[p as usize])
            .find(|p| p.is_valid())
            .ok_or(QueryError::NoValidChain(current.id))?;
        chain.push(next.id);
        current = next;
    }
    Ok(plan_of(tree, &chain))
}

/// Marks every node on `surface` invalid and masks it in `index`. Returns the
/// number of nodes that were valid before.
pub fn invalidate_surface(
    tree: &mut FeasibilityTree,
    index: &mut SpatialIndex,
    scene: &Scene,
    surface: SurfaceId,
) -> Result<usize, QueryError> {
    if scene.surface(surface).is_none() {
        return Err(QueryError::UnknownSurface(surface));
    }
    let hit: Vec<(NodeId, Effector)> = tree
        .nodes()
        .iter()
        .filter(|n| n.surface_id == surface && n.is_valid())
        .map(|n| (n.id, n.effector))
        .collect();
    for &(id, _) in &hit {
        tree.set_valid(id, false);
    }
    index.mask(&hit);
    Ok(hit.len())
}

/// Shallowest valid node containing `p` that still has an all-valid chain to
/// the goal, and that chain. Parents are tried in id order with
/// backtracking; nodes proven dead are not revisited.
pub fn replan(tree: &FeasibilityTree, index: &SpatialIndex, p: &Point3, effector: Effector) -> Option<SurfacePlan> {
    let mut dead = vec![false; tree.len()];
    for start in find_nodes(tree, index, p, effector) {
        if let Some(chain) = valid_chain(tree, start, &mut dead) {
            return Some(plan_of(tree, &chain));
        }
    }
    None
}

fn valid_chain(tree: &FeasibilityTree, start: NodeId, dead: &mut [bool]) -> Option<Vec<NodeId>> {
    let nodes = tree.nodes();
    if dead[start as usize] || !nodes[start as usize].is_valid() {
        return None;
    }
    // explicit stack of (node, next parent slot)
    let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
    while let Some(&(id, slot)) = stack.last() {
        let node = &nodes[id as usize];
        if node.is_root() {
            return Some(stack.iter().map(|(id, _)| *id).collect());
        }
        let next = node.parents[slot..]
            .iter()
            .position(|&q| !dead[q as usize] && nodes[q as usize].is_valid())
            .map(|off| slot + off);
        match next {
            Some(k) => {
                stack.last_mut().expect("non-empty").1 = k + 1;
                stack.push((node.parents[k], 0));
            }
            None => {
                dead[id as usize] = true;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_tree, BuildOptions};
    use crate::query::build_index;
    use crate::scene::test_fixtures::TWO_SURFACES;
    use crate::scene::{generate_scene, parse_instance, ProblemInstance, SceneSpec};

    fn oversol(n: usize) -> (FeasibilityTree, ProblemInstance) {
        let mut inst = parse_instance(TWO_SURFACES).unwrap();
        inst.max_steps = n;
        (build_tree(&inst, &BuildOptions::default()).unwrap(), inst)
    }

    fn grid(n: usize) -> (FeasibilityTree, ProblemInstance) {
        let scene = generate_scene(&SceneSpec::FlatGrid { nx: 4, ny: 2, tile: 0.35, gap: 0.12 }).unwrap();
        let kin = parse_instance(TWO_SURFACES).unwrap().kinematics;
        let goal = scene.surfaces[3].polygon.centroid();
        let inst = ProblemInstance::new(scene, kin, &[goal], Effector::Left, n, None).unwrap();
        (build_tree(&inst, &BuildOptions::default()).unwrap(), inst)
    }

    #[test]
    fn goal_node_plan_is_empty() {
        let (tree, _) = oversol(2);
        let plan = extract_plan(&tree, 0).unwrap();
        assert_eq!(plan.steps(), 0);
        assert_eq!(plan.goal().node, 0);
    }

    #[test]
    fn depth_two_plan_ends_at_goal() {
        let (tree, _) = oversol(2);
        let index = build_index(&tree);
        let p = Point3::new(0.2, 0.0, 0.0);
        let hits = find_nodes(&tree, &index, &p, Effector::Left);
        assert_eq!(tree.node(hits[0]).unwrap().depth, 2);
        let plan = extract_plan(&tree, hits[0]).unwrap();
        assert_eq!(plan.steps(), 2);
        assert_eq!(plan.surfaces(), vec![0, 1, 1]);
        assert_eq!(plan.goal().node, 0);
    }

    #[test]
    fn merged_node_gives_lowest_parent_chain() {
        let (tree, _) = grid(6);
        let multi = tree.nodes().iter().find(|n| n.parents.len() >= 3).expect("a node with 3 parents");
        let a = extract_plan(&tree, multi.id).unwrap();
        let b = extract_plan(&tree, multi.id).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries[1].node, multi.parents[0]);
        for w in a.entries.windows(2) {
            assert!(tree.node(w[0].node).unwrap().parents.contains(&w[1].node));
        }
    }

    #[test]
    fn unknown_and_invalid_nodes() {
        let (mut tree, inst) = oversol(2);
        assert_eq!(extract_plan(&tree, 99), Err(QueryError::UnknownNode(99)));
        let mut index = build_index(&tree);
        assert_eq!(invalidate_surface(&mut tree, &mut index, &inst.scene, 7), Err(QueryError::UnknownSurface(7)));
        let count = invalidate_surface(&mut tree, &mut index, &inst.scene, 1).unwrap();
        assert_eq!(count, 3);
        assert_eq!(extract_plan(&tree, 1), Err(QueryError::InvalidNode(1)));
        let on_zero = tree.layer(2).iter().find(|n| n.surface_id == 0).unwrap().id;
        assert_eq!(extract_plan(&tree, on_zero), Err(QueryError::NoValidChain(on_zero)));
    }

    #[test]
    fn unused_surface_changes_nothing() {
        let scene = generate_scene(&SceneSpec::FlatGrid { nx: 4, ny: 1, tile: 0.35, gap: 0.12 }).unwrap();
        let mut surfaces = scene.surfaces;
        surfaces.push(crate::scene::Surface::new(9, vec![
            Point3::new(20.0, 0.0, 0.0),
            Point3::new(21.0, 0.0, 0.0),
            Point3::new(21.0, 1.0, 0.0),
        ]).unwrap());
        let scene = Scene::new(surfaces);
        let kin = parse_instance(TWO_SURFACES).unwrap().kinematics;
        let goal = scene.surfaces[0].polygon.centroid();
        let inst = ProblemInstance::new(scene, kin, &[goal], Effector::Left, 4, None).unwrap();
        let mut tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        let mut index = build_index(&tree);
        let p = inst.scene.surfaces[2].polygon.centroid();
        let before = replan(&tree, &index, &p, Effector::Right);
        assert_eq!(invalidate_surface(&mut tree, &mut index, &inst.scene, 9).unwrap(), 0);
        assert_eq!(replan(&tree, &index, &p, Effector::Right), before);
    }

    #[test]
    fn cutting_the_only_path_leaves_no_solution() {
        let (mut tree, inst) = oversol(2);
        let mut index = build_index(&tree);
        let p = Point3::new(0.2, 0.0, 0.0);
        assert!(replan(&tree, &index, &p, Effector::Left).is_some());
        invalidate_surface(&mut tree, &mut index, &inst.scene, 1).unwrap();
        assert!(replan(&tree, &index, &p, Effector::Left).is_none());
    }

    #[test]
    fn unblocked_replan_equals_first_hit() {
        let (tree, inst) = grid(6);
        let index = build_index(&tree);
        for s in &inst.scene.surfaces {
            let p = s.polygon.centroid();
            for e in [Effector::Left, Effector::Right] {
                let first = find_nodes(&tree, &index, &p, e).first().map(|&id| extract_plan(&tree, id).unwrap());
                assert_eq!(replan(&tree, &index, &p, e), first);
            }
        }
    }

    #[test]
    fn invalidated_surface_never_returned() {
        let (mut tree, inst) = grid(6);
        let mut index = build_index(&tree);
        invalidate_surface(&mut tree, &mut index, &inst.scene, 1).unwrap();
        for s in &inst.scene.surfaces {
            let p = s.polygon.centroid();
            for e in [Effector::Left, Effector::Right] {
                for id in find_nodes(&tree, &index, &p, e) {
                    assert_ne!(tree.node(id).unwrap().surface_id, 1);
                }
                if let Some(plan) = replan(&tree, &index, &p, e) {
                    assert!(plan.entries.iter().all(|en| en.surface_id != 1));
                }
            }
        }
    }
}
