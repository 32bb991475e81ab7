//! Exact footstep positions along a surface plan.
//!
//! Position `p_i` must lie in the region of plan entry `i` and be reachable
//! from `p_{i-1}`: `p_i - p_{i-1}` is in the reach set of the stance foot,
//! tilted onto the target surface and turned by the stance yaw. Both are
//! affine in the positions, so the problem is a convex QP.

pub mod qp;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{chebyshev_center, rotation_to_normal, HalfSpace, PlanarPolygon, Point3, Polytope, Rotation3};
use crate::query::SurfacePlan;
use crate::scene::{Effector, KinematicModel};

pub use qp::{solve_qp, QpError, QpSolution, QuadraticProgram, SparseRow};

/// Constraint violation accepted as feasible, meters.
pub const EPS_QP: f64 = 1e-8;
/// Above this the problem is declared infeasible; in between it is marginal.
pub const EPS_QP_MARGINAL: f64 = 1e-6;
/// Linear weight on the violation slack.
const SLACK_WEIGHT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Any feasible sequence; returns the one closest to the region centers.
    Feasibility,
    /// Minimizes the sum of squared step lengths.
    MinStepLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Marginal,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Feasible => "feasible",
            SolveStatus::Marginal => "marginal",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FootstepError {
    #[error("horizon {horizon} outside 1..={steps}")]
    Horizon { horizon: usize, steps: usize },
    #[error("start position is not in the first region of the plan")]
    StartOutside,
    #[error("non-finite start position")]
    NonFinite,
}

/// One step: target region and the reach set it is constrained by.
#[derive(Debug, Clone)]
pub struct StepConstraint {
    pub effector: Effector,
    pub region: PlanarPolygon,
    /// Displacement set `p_i - p_{i-1}`, rotated into the world frame.
    pub reach: Polytope,
}

#[derive(Debug, Clone)]
pub struct FootstepProblem {
    pub start: Point3,
    pub start_effector: Effector,
    pub objective: Objective,
    pub steps: Vec<StepConstraint>,
    /// Chebyshev centers of the step regions.
    pub reference: Vec<Point3>,
    pub equalities: Vec<SparseRow>,
    /// Rows over the positions only; the slack column is added by `solve`.
    pub inequalities: Vec<SparseRow>,
}

impl FootstepProblem {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Number of position variables.
    pub fn dim(&self) -> usize {
        3 * self.steps.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootstepPlan {
    pub positions: Vec<Point3>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Largest constraint violation, re-measured on the geometry.
    pub max_violation: f64,
    pub iterations: usize,
}

fn rows_of(h: &HalfSpace, col: usize) -> Vec<(usize, f64)> {
    (0..3).filter(|&k| h.normal[k] != 0.0).map(|k| (col + k, h.normal[k])).collect()
}

/// Builds the program for the first `horizon` steps of `plan` from `start`.
pub fn assemble_problem(
    plan: &SurfacePlan,
    start: &Point3,
    horizon: usize,
    objective: Objective,
    kinematics: &KinematicModel,
) -> Result<FootstepProblem, FootstepError> {
    let k = plan.steps();
    if horizon == 0 || horizon > k {
        return Err(FootstepError::Horizon { horizon, steps: k });
    }
    if !start.iter().all(|c| c.is_finite()) {
        return Err(FootstepError::NonFinite);
    }
    if !plan.start().region.contains(start) {
        return Err(FootstepError::StartOutside);
    }
    let mut steps = Vec::with_capacity(horizon);
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for i in 1..=horizon {
        let stance = &plan.entries[i - 1];
        let target = &plan.entries[i];
        let q = rotation_to_normal(target.region.normal()).expect("region normals are unit vectors");
        let turn = if stance.yaw == 0.0 { q } else { q.compose(&Rotation3::about_z(stance.yaw)) };
        let reach = kinematics.reach(stance.effector).rotated(&turn);
        let col = 3 * (i - 1);
        for h in reach.facets() {
            let mut row = rows_of(h, col);
            let mut rhs = h.offset;
            if i == 1 {
                rhs += h.normal.dot(start);
            } else {
                row.extend(rows_of(&HalfSpace::new(-h.normal, 0.0), col - 3));
            }
            inequalities.push(SparseRow::new(row, rhs));
        }
        let (eq, ineq) = target.region.linear_constraints();
        equalities.extend(eq.iter().map(|h| SparseRow::new(rows_of(h, col), h.offset)));
        inequalities.extend(ineq.iter().map(|h| SparseRow::new(rows_of(h, col), h.offset)));
        steps.push(StepConstraint { effector: target.effector, region: target.region.clone(), reach });
    }
    let reference = steps.iter().map(|s| chebyshev_center(&s.region)).collect();
    Ok(FootstepProblem {
        start: *start,
        start_effector: plan.start().effector,
        objective,
        steps,
        reference,
        equalities,
        inequalities,
    })
}

/// Largest violation of the step and region constraints by `positions`,
/// measured directly on the polytopes and polygons.
pub fn max_violation(problem: &FootstepProblem, positions: &[Point3]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut prev = problem.start;
    for (step, p) in problem.steps.iter().zip(positions) {
        let delta = p - prev;
        for h in step.reach.facets() {
            worst = worst.max(h.excess(&delta));
        }
        worst = worst.max(region_violation(&step.region, p));
        prev = *p;
    }
    worst
}

fn region_violation(region: &PlanarPolygon, p: &Point3) -> f64 {
    let plane = (region.normal().dot(p) - region.offset()).abs();
    let v = region.vertices();
    let inside = match v.len() {
        1 => (p - v[0]).norm(),
        2 => {
            let d = v[1] - v[0];
            let t = ((p - v[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (p - (v[0] + t * d)).norm()
        }
        _ => v
            .iter()
            .zip(v.iter().cycle().skip(1))
            .map(|(a, b)| {
                let m = (b - a).cross(region.normal()).normalize();
                m.dot(&(p - a))
            })
            .fold(0.0, f64::max),
    };
    plane.max(inside)
}

fn status_of(violation: f64) -> SolveStatus {
    if violation <= EPS_QP {
        SolveStatus::Feasible
    } else if violation <= EPS_QP_MARGINAL {
        SolveStatus::Marginal
    } else {
        SolveStatus::Infeasible
    }
}

/// Sum of squared step lengths starting from `start`.
pub fn step_cost(start: &Point3, positions: &[Point3]) -> f64 {
    let mut prev = *start;
    let mut total = 0.0;
    for p in positions {
        total += (p - prev).norm_squared();
        prev = *p;
    }
    total
}

/// Solves the program. All inequalities share one slack `t >= 0`, penalized
/// linearly and quadratically, so the solve always returns a point and `t`
/// measures the smallest uniform relaxation that makes the rows feasible.
/// The status comes from re-measuring the violation of the result.
pub fn solve(problem: &FootstepProblem) -> FootstepPlan {
    let n = problem.dim();
    let t = n;
    let mut hessian = DMatrix::zeros(n + 1, n + 1);
    let mut linear = DVector::zeros(n + 1);
    match problem.objective {
        Objective::Feasibility => {
            for j in 0..n {
                hessian[(j, j)] = 1.0;
            }
            for (i, c) in problem.reference.iter().enumerate() {
                for k in 0..3 {
                    linear[3 * i + k] = -c[k];
                }
            }
        }
        Objective::MinStepLength => {
            let h = problem.horizon();
            for i in 0..h {
                let diag = if i + 1 < h { 4.0 } else { 2.0 };
                for k in 0..3 {
                    hessian[(3 * i + k, 3 * i + k)] = diag;
                    if i + 1 < h {
                        hessian[(3 * i + k, 3 * (i + 1) + k)] = -2.0;
                        hessian[(3 * (i + 1) + k, 3 * i + k)] = -2.0;
                    }
                }
            }
            for k in 0..3 {
                linear[k] = -2.0 * problem.start[k];
            }
        }
    }
    hessian[(t, t)] = 1.0;
    linear[t] = SLACK_WEIGHT;
    let mut inequalities: Vec<SparseRow> = problem
        .inequalities
        .iter()
        .map(|r| {
            let mut coeffs = r.coeffs.clone();
            coeffs.push((t, -1.0));
            SparseRow::new(coeffs, r.rhs)
        })
        .collect();
    inequalities.push(SparseRow::new(vec![(t, -1.0)], 0.0));
    let program = QuadraticProgram { hessian, linear, equalities: problem.equalities.clone(), inequalities };
    match solve_qp(&program) {
        Ok(sol) => {
            let positions: Vec<Point3> =
                (0..problem.horizon()).map(|i| Point3::new(sol.x[3 * i], sol.x[3 * i + 1], sol.x[3 * i + 2])).collect();
            let violation = max_violation(problem, &positions);
            let objective_value = match problem.objective {
                Objective::Feasibility => 0.0,
                Objective::MinStepLength => step_cost(&problem.start, &positions),
            };
            FootstepPlan {
                positions,
                objective_value,
                status: status_of(violation),
                max_violation: violation,
                iterations: sol.iterations,
            }
        }
        Err(_) => FootstepPlan {
            positions: Vec::new(),
            objective_value: f64::NAN,
            status: SolveStatus::Infeasible,
            max_violation: f64::INFINITY,
            iterations: 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_tree, BuildOptions};
    use crate::query::{extract_plan, PlanEntry};
    use crate::scene::test_fixtures::TWO_SURFACES;
    use crate::scene::{parse_instance, ProblemInstance, Scene, Surface};

    fn entry(effector: Effector, region: PlanarPolygon) -> PlanEntry {
        PlanEntry { node: 0, effector, surface_id: 0, yaw: 0.0, region }
    }

    fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> PlanarPolygon {
        PlanarPolygon::new(vec![
            Point3::new(x0, y0, 0.0),
            Point3::new(x1, y0, 0.0),
            Point3::new(x1, y1, 0.0),
            Point3::new(x0, y1, 0.0),
        ])
        .unwrap()
    }

    fn oversol_plan() -> (SurfacePlan, ProblemInstance) {
        let inst = parse_instance(TWO_SURFACES).unwrap();
        let tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        let deep = tree.layer(2).iter().find(|n| n.surface_id == 0).unwrap().id;
        (extract_plan(&tree, deep).unwrap(), inst)
    }

    #[test]
    fn oversol_problem_shape() {
        let (plan, inst) = oversol_plan();
        let p0 = chebyshev_center(&plan.start().region);
        let prob = assemble_problem(&plan, &p0, 2, Objective::Feasibility, &inst.kinematics).unwrap();
        assert_eq!(prob.dim(), 6);
        // one plane for the middle region, three coordinates for the point goal
        assert_eq!(prob.equalities.len(), 4);
        let sol = solve(&prob);
        assert_eq!(sol.status, SolveStatus::Feasible);
        assert!((sol.positions[1] - Point3::new(0.8, 0.2, 0.0)).norm() < 1e-9);
        assert!(plan.entries[1].region.contains(&sol.positions[0]));
    }

    #[test]
    fn single_step_horizon() {
        let (plan, inst) = oversol_plan();
        let p0 = chebyshev_center(&plan.start().region);
        let prob = assemble_problem(&plan, &p0, 1, Objective::Feasibility, &inst.kinematics).unwrap();
        assert_eq!(prob.dim(), 3);
        assert!(prob.inequalities.iter().all(|r| r.coeffs.iter().all(|&(j, _)| j < 3)));
        assert_eq!(solve(&prob).status, SolveStatus::Feasible);
    }

    #[test]
    fn precondition_errors() {
        let (plan, inst) = oversol_plan();
        let p0 = chebyshev_center(&plan.start().region);
        for h in [0, 3] {
            assert_eq!(
                assemble_problem(&plan, &p0, h, Objective::Feasibility, &inst.kinematics).err(),
                Some(FootstepError::Horizon { horizon: h, steps: 2 })
            );
        }
        let off = Point3::new(5.0, 5.0, 0.0);
        assert_eq!(
            assemble_problem(&plan, &off, 1, Objective::Feasibility, &inst.kinematics).err(),
            Some(FootstepError::StartOutside)
        );
    }

    #[test]
    fn one_step_onto_large_region() {
        let kin = KinematicModel::synthetic_biped();
        let plan = SurfacePlan {
            entries: vec![entry(Effector::Left, rect(-2.0, 2.0, -2.0, 2.0)), entry(Effector::Right, rect(-2.0, 2.0, -2.0, 2.0))],
        };
        let p0 = Point3::new(0.1, 0.2, 0.0);
        let prob = assemble_problem(&plan, &p0, 1, Objective::Feasibility, &kin).unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, SolveStatus::Feasible);
        assert!(plan.entries[1].region.contains(&sol.positions[0]));
        assert!(kin.reach(Effector::Left).facets().iter().all(|h| h.excess(&(sol.positions[0] - p0)) <= EPS_QP));
    }

    #[test]
    fn infeasible_plan_reports_violation() {
        let kin = KinematicModel::synthetic_biped();
        let plan = SurfacePlan {
            entries: vec![entry(Effector::Left, rect(-0.1, 0.1, -0.1, 0.1)), entry(Effector::Right, rect(3.0, 3.2, -0.1, 0.1))],
        };
        let prob = assemble_problem(&plan, &Point3::zeros(), 1, Objective::Feasibility, &kin).unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.max_violation > 1.0);
    }

    /// Start and goal fixed; the middle step is found by a 1 cm grid search
    /// over the plane.
    #[test]
    fn min_step_length_matches_grid_search() {
        let kin = KinematicModel::synthetic_biped();
        let floor = rect(-1.0, 2.0, -1.0, 1.0);
        let goal = Point3::new(0.6, 0.15, 0.0);
        let plan = SurfacePlan {
            entries: vec![
                entry(Effector::Left, floor.clone()),
                entry(Effector::Right, floor.clone()),
                entry(Effector::Left, PlanarPolygon::point(goal, &Point3::z())),
            ],
        };
        let p0 = Point3::new(0.0, 0.15, 0.0);
        let prob = assemble_problem(&plan, &p0, 2, Objective::MinStepLength, &kin).unwrap();
        let sol = solve(&prob);
        assert_eq!(sol.status, SolveStatus::Feasible);
        let mut best = f64::INFINITY;
        for i in -50..=100 {
            for j in -50..=50 {
                let p1 = Point3::new(i as f64 * 0.01, j as f64 * 0.01, 0.0);
                if max_violation(&prob, &[p1, goal]) <= 1e-9 {
                    best = best.min(step_cost(&p0, &[p1, goal]));
                }
            }
        }
        assert!((sol.objective_value - best).abs() < 1e-4, "{} vs {}", sol.objective_value, best);
        let a = (sol.positions[0] - p0).norm();
        let b = (sol.positions[1] - sol.positions[0]).norm();
        assert!((a - b).abs() < 1e-9);
    }

    fn ramp_instance(n: usize) -> ProblemInstance {
        let ramp = |x: f64| 0.2 * (x - 0.4);
        let surfaces = vec![
            Surface::new(0, rect(-0.3, 0.3, -0.5, 0.5).vertices().to_vec()).unwrap(),
            Surface::new(1, vec![
                Point3::new(0.4, -0.5, ramp(0.4)),
                Point3::new(1.0, -0.5, ramp(1.0)),
                Point3::new(1.0, 0.5, ramp(1.0)),
                Point3::new(0.4, 0.5, ramp(0.4)),
            ])
            .unwrap(),
            Surface::new(2, vec![
                Point3::new(1.1, -0.5, 0.12),
                Point3::new(1.7, -0.5, 0.12),
                Point3::new(1.7, 0.5, 0.12),
                Point3::new(1.1, 0.5, 0.12),
            ])
            .unwrap(),
        ];
        let kin = KinematicModel::synthetic_biped();
        let scene = Scene::new(surfaces).inset(kin.inset_margin()).unwrap();
        ProblemInstance::new(scene, kin, &[Point3::new(1.4, 0.2, 0.12)], Effector::Left, n, None).unwrap()
    }

    #[test]
    fn every_node_is_sound_on_a_ramp() {
        let inst = ramp_instance(8);
        let tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        assert!(tree.len() > 20);
        for node in tree.nodes().iter().filter(|n| !n.is_root()) {
            let plan = extract_plan(&tree, node.id).unwrap();
            let p0 = chebyshev_center(&node.region);
            for objective in [Objective::Feasibility, Objective::MinStepLength] {
                let prob = assemble_problem(&plan, &p0, plan.steps(), objective, &inst.kinematics).unwrap();
                let sol = solve(&prob);
                assert_eq!(sol.status, SolveStatus::Feasible, "node {} violation {:e}", node.id, sol.max_violation);
            }
        }
    }

    #[test]
    fn receding_horizon_stays_feasible() {
        let inst = ramp_instance(6);
        let tree = build_tree(&inst, &BuildOptions::default()).unwrap();
        let node = tree.layer(6)[0].id;
        let mut plan = extract_plan(&tree, node).unwrap();
        let mut p = chebyshev_center(&plan.start().region);
        while plan.steps() > 0 {
            let prob = assemble_problem(&plan, &p, 1, Objective::Feasibility, &inst.kinematics).unwrap();
            let sol = solve(&prob);
            assert_eq!(sol.status, SolveStatus::Feasible);
            p = sol.positions[0];
            plan.entries.remove(0);
        }
        assert!(plan.goal().region.contains(&p));
    }
}
