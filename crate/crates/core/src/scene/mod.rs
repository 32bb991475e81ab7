//! Environment, kinematic constraints and problem instances.

mod generate;
mod io;
mod validate;

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    central_symmetry, convex_hull, inset_polygon, GeometryError, PlanarPolygon, Point3, Polytope, EPS_GEO,
};

pub use generate::{generate_scene, SceneSpec};
pub use io::{load_instance, parse_instance, save_instance, InstanceFile, KinematicsRecord, SurfaceRecord};
pub use validate::{validate_scene, ValidationReport};

pub type SurfaceId = u32;

#[cfg(test)]
pub(crate) mod test_fixtures {
    /// Two flat surfaces; the left foot must reach a point on the far one.
    pub(crate) const TWO_SURFACES: &str = r#"{
        "surfaces": [
            {"id": 0, "vertices": [[-0.3,-0.5,0],[0.3,-0.5,0],[0.3,0.1,0],[-0.3,0.1,0]]},
            {"id": 1, "vertices": [[0.45,-0.5,0],[1.05,-0.5,0],[1.05,0.5,0],[0.45,0.5,0]]}
        ],
        "kinematics": {
            "reach_left_given_right": [[-0.35,0.12,-0.25],[0.45,0.12,-0.25],[0.45,0.45,-0.25],[-0.35,0.45,-0.25],
                                       [-0.25,0.14,0.25],[0.35,0.14,0.25],[0.35,0.40,0.25],[-0.25,0.40,0.25]],
            "reach_right_given_left": [[-0.35,-0.12,-0.25],[0.45,-0.12,-0.25],[0.45,-0.45,-0.25],[-0.35,-0.45,-0.25],
                                       [-0.25,-0.14,0.25],[0.35,-0.14,0.25],[0.35,-0.40,0.25],[-0.25,-0.40,0.25]],
            "foot_half_extents": [0.0, 0.0]
        },
        "goal": {"vertices": [[0.8, 0.2, 0.0]]},
        "goal_effector": "left",
        "max_steps": 2
    }"#;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effector {
    Left,
    Right,
}

impl Effector {
    pub fn other(self) -> Effector {
        match self {
            Effector::Left => Effector::Right,
            Effector::Right => Effector::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Effector::Left => 0,
            Effector::Right => 1,
        }
    }
}

impl fmt::Display for Effector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Effector::Left => "left",
            Effector::Right => "right",
        })
    }
}

impl std::str::FromStr for Effector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Effector::Left),
            "right" | "r" => Ok(Effector::Right),
            other => Err(format!("unknown effector `{other}` (expected left or right)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One convex contact surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub id: SurfaceId,
    pub polygon: PlanarPolygon,
}

impl Surface {
    pub fn new(id: SurfaceId, vertices: Vec<Point3>) -> Result<Self, GeometryError> {
        Ok(Self { id, polygon: PlanarPolygon::new(vertices)? })
    }

    pub fn normal(&self) -> &Vector3<f64> {
        self.polygon.normal()
    }
}

/// The environment: a union of convex contact surfaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub surfaces: Vec<Surface>,
}

impl Scene {
    pub fn new(surfaces: Vec<Surface>) -> Self {
        Self { surfaces }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn surface(&self, id: SurfaceId) -> Option<&Surface> {
        self.surfaces.iter().find(|s| s.id == id)
    }

    /// Surfaces shrunk by `margin`; fails when one vanishes.
    pub fn inset(&self, margin: f64) -> Result<Scene, SceneError> {
        let mut out = Vec::with_capacity(self.surfaces.len());
        for s in &self.surfaces {
            match inset_polygon(&s.polygon, margin)? {
                Some(polygon) => out.push(Surface { id: s.id, polygon }),
                None => {
                    return Err(SceneError::Validation(format!(
                        "surface {} vanishes when inset by {margin} m",
                        s.id
                    )))
                }
            }
        }
        Ok(Scene::new(out))
    }
}

/// Linearized kinematic constraints of a biped.
///
/// `reach_left_given_right` is the set of left-foot positions reachable with
/// the right foot at the origin. Antecedent sets are their point reflections:
/// the right-foot positions from which the left foot can land on the origin
/// are `-reach_left_given_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicModel {
    reach_left_given_right: Polytope,
    reach_right_given_left: Polytope,
    antecedent_of_left: Polytope,
    antecedent_of_right: Polytope,
    pub foot_half_extents: [f64; 2],
}

impl KinematicModel {
    pub fn new(
        reach_left_given_right: Polytope,
        reach_right_given_left: Polytope,
        foot_half_extents: [f64; 2],
    ) -> Result<Self, SceneError> {
        for (name, p) in [
            ("reach_left_given_right", &reach_left_given_right),
            ("reach_right_given_left", &reach_right_given_left),
        ] {
            if !p.is_full_dimensional() {
                return Err(SceneError::Validation(format!(
                    "{name} must be a full-dimensional polytope (affine dimension {})",
                    p.dim()
                )));
            }
        }
        if foot_half_extents.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(SceneError::Validation(format!(
                "foot_half_extents must be non-negative, got {foot_half_extents:?}"
            )));
        }
        let antecedent_of_left = central_symmetry(&reach_left_given_right);
        let antecedent_of_right = central_symmetry(&reach_right_given_left);
        let model = Self {
            reach_left_given_right,
            reach_right_given_left,
            antecedent_of_left,
            antecedent_of_right,
            foot_half_extents,
        };
        model.check_antecedents()?;
        Ok(model)
    }

    pub fn from_vertices(
        left_given_right: &[Point3],
        right_given_left: &[Point3],
        foot_half_extents: [f64; 2],
    ) -> Result<Self, SceneError> {
        Self::new(convex_hull(left_given_right)?, convex_hull(right_given_left)?, foot_half_extents)
    }

    /// A plausible human-scale biped. Synthetic numbers, not measured from
    /// any robot.
    pub fn synthetic_biped() -> Self {
        let left: Vec<Point3> = [
            (-0.35, 0.12, -0.25),
            (0.45, 0.12, -0.25),
            (0.45, 0.45, -0.25),
            (-0.35, 0.45, -0.25),
            (-0.25, 0.14, 0.25),
            (0.35, 0.14, 0.25),
            (0.35, 0.40, 0.25),
            (-0.25, 0.40, 0.25),
        ]
        .iter()
        .map(|&(x, y, z)| Point3::new(x, y, z))
        .collect();
        let right: Vec<Point3> = left.iter().map(|p| Point3::new(p.x, -p.y, p.z)).collect();
        Self::from_vertices(&left, &right, [0.06, 0.04]).expect("synthetic kinematics are valid")
    }

    pub fn reach_left_given_right(&self) -> &Polytope {
        &self.reach_left_given_right
    }

    pub fn reach_right_given_left(&self) -> &Polytope {
        &self.reach_right_given_left
    }

    /// Positions of the moving foot reachable with `stance` at the origin.
    pub fn reach(&self, stance: Effector) -> &Polytope {
        match stance {
            Effector::Right => &self.reach_left_given_right,
            Effector::Left => &self.reach_right_given_left,
        }
    }

    /// Positions of the other foot from which `target` can step onto the
    /// origin.
    pub fn antecedent(&self, target: Effector) -> &Polytope {
        match target {
            Effector::Left => &self.antecedent_of_left,
            Effector::Right => &self.antecedent_of_right,
        }
    }

    /// Margin applied to surfaces before planning.
    pub fn inset_margin(&self) -> f64 {
        self.foot_half_extents[0].max(self.foot_half_extents[1])
    }

    fn check_antecedents(&self) -> Result<(), SceneError> {
        for target in [Effector::Left, Effector::Right] {
            let reach = self.reach(target.other());
            let ante = self.antecedent(target);
            let mirrored = reach.vertices().iter().all(|v| {
                ante.vertices().iter().any(|a| (a + v).norm() <= EPS_GEO)
            });
            if !mirrored || reach.vertices().len() != ante.vertices().len() {
                return Err(SceneError::Validation(format!(
                    "antecedent set of the {target} foot is not the reflection of its reach set"
                )));
            }
        }
        Ok(())
    }
}

/// A complete planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub scene: Scene,
    pub kinematics: KinematicModel,
    /// Goal set as a polytope (may be a single point).
    pub goal: Polytope,
    /// Goal set as a region on its supporting surface plane.
    pub goal_region: PlanarPolygon,
    pub goal_surface: SurfaceId,
    pub goal_effector: Effector,
    pub max_steps: usize,
    /// Discrete relative yaw angles in radians; empty disables yaw.
    pub yaw_angles: Vec<f64>,
}

impl ProblemInstance {
    /// Validates and assembles an instance. `scene` is used as given (insetting
    /// is the loader's job).
    pub fn new(
        scene: Scene,
        kinematics: KinematicModel,
        goal_points: &[Point3],
        goal_effector: Effector,
        max_steps: usize,
        yaw_angles_deg: Option<&[f64]>,
    ) -> Result<Self, SceneError> {
        let mut ids: Vec<SurfaceId> = scene.surfaces.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(SceneError::Validation(format!("duplicate surface id {}", w[0])));
        }
        if scene.is_empty() {
            return Err(SceneError::Validation("scene has no surfaces".into()));
        }
        let goal = convex_hull(goal_points)?;
        if goal.dim() > 2 {
            return Err(SceneError::Validation("goal must be planar (a point, segment or polygon)".into()));
        }
        let holder = scene
            .surfaces
            .iter()
            .find(|s| goal.vertices().iter().all(|v| s.polygon.contains(v)))
            .ok_or_else(|| SceneError::Validation("goal is not contained in any contact surface".into()))?;
        let goal_region = PlanarPolygon::from_points_on_plane(goal.vertices(), holder.normal())?;
        let yaw_angles = match yaw_angles_deg {
            None => Vec::new(),
            Some(deg) => uniform_yaw_set(deg)?,
        };
        Ok(Self {
            goal_surface: holder.id,
            scene,
            kinematics,
            goal,
            goal_region,
            goal_effector,
            max_steps,
            yaw_angles,
        })
    }

    pub fn uses_yaw(&self) -> bool {
        !self.yaw_angles.is_empty()
    }
}

/// Yaw sets must be the uniform grid `{k · 360/K}` so that adding two
/// angles stays inside the set.
pub fn uniform_yaw_set(deg: &[f64]) -> Result<Vec<f64>, SceneError> {
    if deg.is_empty() {
        return Err(SceneError::Validation("yaw_angles_deg must not be empty".into()));
    }
    let mut sorted: Vec<f64> = deg.iter().map(|d| d.rem_euclid(360.0)).collect();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let step = 360.0 / k as f64;
    for (i, a) in sorted.iter().enumerate() {
        if (a - i as f64 * step).abs() > 1e-6 {
            return Err(SceneError::Validation(format!(
                "yaw_angles_deg must be the uniform set {{k * {step}}} for k < {k}, got {deg:?}"
            )));
        }
    }
    Ok((0..k).map(|i| (i as f64 * step).to_radians()).collect())
}
