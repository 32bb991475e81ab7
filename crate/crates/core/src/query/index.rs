use kiddo::{ImmutableKdTree, SquaredEuclidean};

use crate::geometry::{chebyshev_center, Point3, EPS_GEO};
use crate::planner::{FeasibilityTree, NodeId};
use crate::scene::Effector;

/// Per-effector kd-tree keyed on region Chebyshev centers.
///
/// A region is inside the ball of radius `radius` around its key, so a range
/// query with that radius never misses a containing node. Candidates are then
/// checked exactly.
pub struct SpatialIndex {
    parts: [Part; 2],
}

struct Part {
    kd: ImmutableKdTree<f64, 3>,
    ids: Vec<NodeId>,
    masked: Vec<bool>,
    radius: f64,
}

impl Part {
    fn new(tree: &FeasibilityTree, effector: Effector) -> Self {
        let mut keys = Vec::new();
        let mut ids = Vec::new();
        let mut radius: f64 = 0.0;
        for n in tree.nodes().iter().filter(|n| n.effector == effector && n.is_valid()) {
            let c = chebyshev_center(&n.region);
            radius = radius.max(n.region.radius_about(&c));
            keys.push([c.x, c.y, c.z]);
            ids.push(n.id);
        }
        let kd = ImmutableKdTree::new_from_slice(&keys).expect("finite keys");
        let masked = vec![false; ids.len()];
        Self { kd, ids, masked, radius: radius + 2.0 * EPS_GEO }
    }
}

impl SpatialIndex {
    /// Number of unmasked entries for `effector`.
    pub fn len(&self, effector: Effector) -> usize {
        self.parts[effector.index()].masked.iter().filter(|m| !**m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len(Effector::Left) + self.len(Effector::Right) == 0
    }

    /// Search radius used for `effector`.
    pub fn radius(&self, effector: Effector) -> f64 {
        self.parts[effector.index()].radius
    }

    /// Unmasked node ids whose key lies within the search radius of `p`.
    pub fn candidates(&self, p: &Point3, effector: Effector) -> Vec<NodeId> {
        let part = &self.parts[effector.index()];
        if part.ids.is_empty() {
            return Vec::new();
        }
        let r = part.radius;
        part.kd
            .query(&[p.x, p.y, p.z])
            .within::<SquaredEuclidean<f64>>(r * r)
            .unsorted()
            .execute()
            .into_iter()
            .filter(|hit| !part.masked[hit.item as usize])
            .map(|hit| part.ids[hit.item as usize])
            .collect()
    }

    /// Masks the entries of the given nodes; returns how many were unmasked.
    pub(crate) fn mask(&mut self, nodes: &[(NodeId, Effector)]) -> usize {
        let mut count = 0;
        for &(id, e) in nodes {
            let part = &mut self.parts[e.index()];
            if let Ok(i) = part.ids.binary_search(&id) {
                if !part.masked[i] {
                    part.masked[i] = true;
                    count += 1;
                }
            }
        }
        count
    }
}

pub fn build_index(tree: &FeasibilityTree) -> SpatialIndex {
    SpatialIndex { parts: [Part::new(tree, Effector::Left), Part::new(tree, Effector::Right)] }
}

/// Valid nodes of `effector` whose region contains `p`, shallowest first,
/// ties broken by id.
pub fn find_nodes(tree: &FeasibilityTree, index: &SpatialIndex, p: &Point3, effector: Effector) -> Vec<NodeId> {
    let mut hits: Vec<(u32, NodeId)> = index
        .candidates(p, effector)
        .into_iter()
        .filter_map(|id| tree.node(id))
        .filter(|n| n.is_valid() && n.region.contains(p))
        .map(|n| (n.depth, n.id))
        .collect();
    hits.sort_unstable();
    hits.into_iter().map(|(_, id)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_tree, BuildOptions};
    use crate::scene::test_fixtures::TWO_SURFACES;
    use crate::scene::{generate_scene, parse_instance, ProblemInstance, SceneSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stones(n: usize) -> (FeasibilityTree, ProblemInstance) {
        let scene = generate_scene(&SceneSpec::SteppingStones {
            rows: 3,
            cols: 4,
            spacing: 0.42,
            size: 0.3,
            xy_jitter: 0.03,
            height_jitter: 0.04,
            seed: 9,
        })
        .unwrap();
        let base = parse_instance(TWO_SURFACES).unwrap();
        let goal = scene.surfaces[5].polygon.centroid();
        let inst = ProblemInstance::new(scene, base.kinematics, &[goal], Effector::Left, n, None).unwrap();
        (build_tree(&inst, &BuildOptions::default()).unwrap(), inst)
    }

    #[test]
    fn single_node_tree() {
        let mut inst = parse_instance(TWO_SURFACES).unwrap();
        inst.max_steps = 0;
        let tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        let index = build_index(&tree);
        assert_eq!(index.len(Effector::Left), 1);
        assert_eq!(index.len(Effector::Right), 0);
        assert_eq!(find_nodes(&tree, &index, &Point3::new(0.8, 0.2, 0.0), Effector::Left), vec![0]);
        assert!(find_nodes(&tree, &index, &Point3::new(0.8, 0.2, 0.0), Effector::Right).is_empty());
    }

    #[test]
    fn every_node_finds_itself() {
        let (tree, _) = stones(10);
        let index = build_index(&tree);
        for n in tree.nodes() {
            let c = chebyshev_center(&n.region);
            assert!(find_nodes(&tree, &index, &c, n.effector).contains(&n.id), "node {}", n.id);
        }
    }

    #[test]
    fn off_scene_point_is_empty() {
        let (tree, _) = stones(6);
        let index = build_index(&tree);
        assert!(find_nodes(&tree, &index, &Point3::new(50.0, 50.0, 0.0), Effector::Left).is_empty());
    }

    #[test]
    fn matches_linear_scan() {
        let (tree, inst) = stones(8);
        let index = build_index(&tree);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut nonempty = 0;
        for _ in 0..1000 {
            let s = &inst.scene.surfaces[rng.random_range(0..inst.scene.len())];
            let (lo, hi) = s.polygon.bounds();
            let x = rng.random_range(lo.x - 0.05..hi.x + 0.05);
            let y = rng.random_range(lo.y - 0.05..hi.y + 0.05);
            let n = s.polygon.normal();
            let z = (s.polygon.offset() - n.x * x - n.y * y) / n.z;
            let p = Point3::new(x, y, z);
            for e in [Effector::Left, Effector::Right] {
                let mut oracle = tree.scan(&p, e);
                oracle.sort_by_key(|&id| (tree.node(id).unwrap().depth, id));
                let got = find_nodes(&tree, &index, &p, e);
                assert_eq!(got, oracle);
                nonempty += !got.is_empty() as usize;
            }
        }
        assert!(nonempty > 300);
    }
}
