use crate::geometry::{clip_polygon_by_polytope, minkowski_sum, rotation_to_normal, Point3, Polytope, Rotation3, EPS_GEO};
use crate::scene::ProblemInstance;

use super::{Node, UNASSIGNED};

/// Positions of the other foot from which `node.region` is reachable in one
/// step: the region plus the antecedent set of `node.effector`, tilted onto
/// the region's surface.
pub fn reach_polytope(node: &Node, instance: &ProblemInstance) -> Polytope {
    reach_polytope_at(node, instance, 0.0)
}

/// Same as [`reach_polytope`] with the antecedent set first turned by `yaw`
/// about its local z axis. `yaw` is the orientation of the foot that will be
/// standing on the new region.
pub fn reach_polytope_at(node: &Node, instance: &ProblemInstance, yaw: f64) -> Polytope {
    let q = rotation_to_normal(node.region.normal()).expect("region normals are unit vectors");
    let turn = if yaw == 0.0 { q } else { q.compose(&Rotation3::about_z(yaw)) };
    let antecedent = instance.kinematics.antecedent(node.effector).rotated(&turn);
    minkowski_sum(&antecedent, &node.region.to_polytope())
}

fn boxes_overlap(a: &(Point3, Point3), b: &(Point3, Point3)) -> bool {
    (0..3).all(|i| a.0[i] <= b.1[i] + EPS_GEO && b.0[i] <= a.1[i] + EPS_GEO)
}

fn children(node: &Node, instance: &ProblemInstance, reach: &Polytope, yaw: Option<u16>, out: &mut Vec<Node>) {
    let bounds = reach.bounds();
    for s in &instance.scene.surfaces {
        if !boxes_overlap(&bounds, &s.polygon.bounds()) {
            continue;
        }
        if let Some(region) = clip_polygon_by_polytope(&s.polygon, reach) {
            out.push(Node {
                id: UNASSIGNED,
                effector: node.effector.other(),
                surface_id: s.id,
                region,
                parents: vec![node.id],
                depth: node.depth + 1,
                yaw,
                valid: true,
            });
        }
    }
}

/// Children of `node`: one per surface cut by its reach polytope. Ids are
/// left unassigned.
pub fn feasible_nodes(node: &Node, instance: &ProblemInstance) -> Vec<Node> {
    let reach = reach_polytope(node, instance);
    let mut out = Vec::new();
    children(node, instance, &reach, node.yaw, &mut out);
    out
}

/// Children of `node` over every relative yaw `θ` of the instance. A child
/// reached with `θ` gets yaw index `node.yaw + θ` modulo the set size.
pub fn feasible_nodes_yaw(node: &Node, instance: &ProblemInstance) -> Vec<Node> {
    let k = instance.yaw_angles.len();
    assert!(k > 0, "instance has no yaw angles");
    let base = node.yaw.unwrap_or(0) as usize;
    let mut out = Vec::new();
    for theta in 0..k {
        let gamma = (base + theta) % k;
        let reach = reach_polytope_at(node, instance, instance.yaw_angles[gamma]);
        children(node, instance, &reach, Some(gamma as u16), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{contains, convex_hull, translate, PlanarPolygon};
    use crate::scene::{parse_instance, Effector, KinematicModel, ProblemInstance, Scene, Surface};

    fn root_of(inst: &ProblemInstance) -> Node {
        Node {
            id: 0,
            effector: inst.goal_effector,
            surface_id: inst.goal_surface,
            region: inst.goal_region.clone(),
            parents: Vec::new(),
            depth: 0,
            yaw: inst.uses_yaw().then_some(0),
            valid: true,
        }
    }

    fn cube_kinematics(half: f64) -> KinematicModel {
        let mut pts = Vec::new();
        for &x in &[-half, half] {
            for &y in &[-half, half] {
                for &z in &[-half, half] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        KinematicModel::from_vertices(&pts, &pts, [0.0, 0.0]).unwrap()
    }

    fn square(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Surface {
        Surface::new(
            id,
            vec![
                Point3::new(x0, y0, 0.0),
                Point3::new(x1, y0, 0.0),
                Point3::new(x1, y1, 0.0),
                Point3::new(x0, y1, 0.0),
            ],
        )
        .unwrap()
    }

    fn instance(surfaces: Vec<Surface>, kin: KinematicModel, goal: Point3, yaw: Option<&[f64]>) -> ProblemInstance {
        ProblemInstance::new(Scene::new(surfaces), kin, &[goal], Effector::Left, 4, yaw).unwrap()
    }

    #[test]
    fn point_goal_gives_translated_antecedent() {
        let inst = parse_instance(crate::scene::test_fixtures::TWO_SURFACES).unwrap();
        let root = root_of(&inst);
        let r = reach_polytope(&root, &inst);
        let p = inst.goal.vertices()[0];
        assert_eq!(r, translate(inst.kinematics.antecedent(Effector::Left), &p));
    }

    #[test]
    fn unit_cube_at_origin() {
        let inst = instance(vec![square(0, -1.0, -1.0, 1.0, 1.0)], cube_kinematics(0.5), Point3::zeros(), None);
        let r = reach_polytope(&root_of(&inst), &inst);
        assert_eq!(r, convex_hull(inst.kinematics.antecedent(Effector::Left).vertices()).unwrap());
        assert_eq!(r.vertices().len(), 8);
    }

    #[test]
    fn square_region_matches_vertex_sum_hull() {
        let inst = instance(vec![square(0, -1.0, -1.0, 1.0, 1.0)], cube_kinematics(0.25), Point3::zeros(), None);
        let mut node = root_of(&inst);
        node.region = PlanarPolygon::new(vec![
            Point3::new(-0.2, -0.1, 0.0),
            Point3::new(0.3, -0.1, 0.0),
            Point3::new(0.3, 0.4, 0.0),
            Point3::new(-0.2, 0.4, 0.0),
        ])
        .unwrap();
        let r = reach_polytope(&node, &inst);
        let mut sums = Vec::new();
        for a in inst.kinematics.antecedent(Effector::Left).vertices() {
            for b in node.region.vertices() {
                sums.push(a + b);
            }
        }
        assert_eq!(r, convex_hull(&sums).unwrap());
    }

    #[test]
    fn tilted_surface_rotates_antecedent() {
        let a = 30f64.to_radians();
        let n = Point3::new(a.sin(), 0.0, a.cos());
        let inst = instance(vec![square(0, -1.0, -1.0, 1.0, 1.0)], cube_kinematics(0.25), Point3::zeros(), None);
        let mut node = root_of(&inst);
        node.region = PlanarPolygon::point(Point3::zeros(), &n);
        let r = reach_polytope(&node, &inst);
        let q = rotation_to_normal(&n).unwrap();
        assert_eq!(r.vertices().len(), 8);
        for v in inst.kinematics.antecedent(Effector::Left).vertices() {
            assert!(contains(&r, &q.apply(v)));
        }
        assert!(!contains(&r, &Point3::new(0.0, 0.0, 0.25 * 3f64.sqrt() + 0.01)));
    }

    #[test]
    fn reach_below_surfaces_gives_no_children() {
        let inst = instance(vec![square(0, -1.0, -1.0, 1.0, 1.0)], cube_kinematics(0.25), Point3::zeros(), None);
        let mut node = root_of(&inst);
        node.region = PlanarPolygon::point(Point3::new(0.0, 0.0, -2.0), &Point3::z());
        assert!(feasible_nodes(&node, &inst).is_empty());
    }

    #[test]
    fn saturated_surface_is_returned_whole() {
        let small = square(1, 0.1, 0.1, 0.2, 0.2);
        let inst = instance(vec![square(0, -0.05, -0.05, 0.05, 0.05), small.clone()], cube_kinematics(1.0), Point3::zeros(), None);
        let kids = feasible_nodes(&root_of(&inst), &inst);
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[1].surface_id, 1);
        assert_eq!(kids[1].region.canonical(), small.polygon.canonical());
        assert!(kids.iter().all(|k| k.effector == Effector::Right && k.depth == 1 && k.parents == vec![0]));
    }

    #[test]
    fn oversol_first_layer_is_one_right_node() {
        let inst = parse_instance(crate::scene::test_fixtures::TWO_SURFACES).unwrap();
        let kids = feasible_nodes(&root_of(&inst), &inst);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].surface_id, 1);
        assert_eq!(kids[0].effector, Effector::Right);
    }

    #[test]
    fn single_yaw_matches_plain_expansion() {
        let surfaces = vec![square(0, -0.3, -0.3, 0.3, 0.3), square(1, 0.4, -0.3, 0.9, 0.3)];
        let plain = instance(surfaces.clone(), KinematicModel::synthetic_biped(), Point3::new(0.5, 0.0, 0.0), None);
        let yawed = instance(surfaces, KinematicModel::synthetic_biped(), Point3::new(0.5, 0.0, 0.0), Some(&[0.0]));
        let a = feasible_nodes(&root_of(&plain), &plain);
        let b = feasible_nodes_yaw(&root_of(&yawed), &yawed);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.surface_id, y.surface_id);
            assert_eq!(x.region, y.region);
            assert_eq!(y.yaw, Some(0));
        }
    }

    #[test]
    fn half_turn_on_symmetric_antecedent_repeats_regions() {
        let surfaces = vec![square(0, -1.0, -1.0, 1.0, 1.0)];
        let inst = instance(surfaces, cube_kinematics(0.3), Point3::zeros(), Some(&[0.0, 180.0]));
        let kids = feasible_nodes_yaw(&root_of(&inst), &inst);
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].region.canonical(), kids[1].region.canonical());
        assert_eq!((kids[0].yaw, kids[1].yaw), (Some(0), Some(1)));
    }

    #[test]
    fn four_yaws_match_independent_clips() {
        let surfaces = vec![square(0, -1.0, -1.0, 1.0, 1.0)];
        let inst = instance(
            surfaces.clone(),
            KinematicModel::synthetic_biped(),
            Point3::new(0.1, -0.2, 0.0),
            Some(&[0.0, 90.0, 180.0, 270.0]),
        );
        let mut node = root_of(&inst);
        node.yaw = Some(1);
        let kids = feasible_nodes_yaw(&node, &inst);
        assert!(kids.len() <= 4);
        for k in &kids {
            let gamma = inst.yaw_angles[k.yaw.unwrap() as usize];
            let anti = inst.kinematics.antecedent(Effector::Left);
            let turned: Vec<Point3> = anti
                .vertices()
                .iter()
                .map(|v| Rotation3::about_z(gamma).apply(v) + node.region.vertices()[0])
                .collect();
            let oracle = clip_polygon_by_polytope(&surfaces[0].polygon, &convex_hull(&turned).unwrap()).unwrap();
            assert_eq!(k.region.canonical(), oracle.canonical());
        }
        let yaws: Vec<_> = kids.iter().map(|k| k.yaw.unwrap()).collect();
        assert_eq!(yaws, vec![1, 2, 3, 0]);
    }
}
