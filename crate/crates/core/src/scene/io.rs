//! JSON instance files.
//!
//! ```json
//! {
//!   "surfaces": [{"id": 0, "vertices": [[0,0,0],[1,0,0],[1,1,0],[0,1,0]]}],
//!   "kinematics": {
//!     "reach_left_given_right": [[x,y,z], ...],
//!     "reach_right_given_left": [[x,y,z], ...],
//!     "foot_half_extents": [0.06, 0.04]
//!   },
//!   "goal": {"vertices": [[0.5,0.5,0]]},
//!   "goal_effector": "left",
//!   "max_steps": 10,
//!   "yaw_angles_deg": [0, 90, 180, 270],
//!   "preinset": false
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Effector, KinematicModel, ProblemInstance, Scene, SceneError, Surface, SurfaceId};
use crate::geometry::{PlanarPolygon, Point3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceRecord {
    pub id: SurfaceId,
    pub vertices: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsRecord {
    pub reach_left_given_right: Vec<[f64; 3]>,
    pub reach_right_given_left: Vec<[f64; 3]>,
    pub foot_half_extents: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalRecord {
    pub vertices: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub surfaces: Vec<SurfaceRecord>,
    pub kinematics: KinematicsRecord,
    pub goal: GoalRecord,
    #[serde(default = "default_effector")]
    pub goal_effector: Effector,
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_angles_deg: Option<Vec<f64>>,
    #[serde(default)]
    pub preinset: bool,
}

fn default_effector() -> Effector {
    Effector::Left
}

fn points(raw: &[[f64; 3]]) -> Vec<Point3> {
    raw.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect()
}

fn raw(points: &[Point3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| [p.x, p.y, p.z]).collect()
}

impl InstanceFile {
    /// Validates the record and builds the instance, insetting surfaces
    /// unless `preinset` is set.
    pub fn into_instance(self) -> Result<ProblemInstance, SceneError> {
        let kinematics = KinematicModel::from_vertices(
            &points(&self.kinematics.reach_left_given_right),
            &points(&self.kinematics.reach_right_given_left),
            self.kinematics.foot_half_extents,
        )
        .map_err(|e| SceneError::Validation(format!("kinematics: {e}")))?;

        let mut surfaces = Vec::with_capacity(self.surfaces.len());
        for rec in &self.surfaces {
            let polygon = PlanarPolygon::new(points(&rec.vertices))
                .map_err(|e| SceneError::Validation(format!("surface {}: {e}", rec.id)))?;
            if polygon.normal().z <= 0.0 {
                return Err(SceneError::Validation(format!(
                    "surface {}: normal {:?} does not point up (vertices must be counter-clockwise seen from above)",
                    rec.id,
                    polygon.normal().as_slice()
                )));
            }
            surfaces.push(Surface { id: rec.id, polygon });
        }
        let mut scene = Scene::new(surfaces);
        if !self.preinset {
            scene = scene.inset(kinematics.inset_margin())?;
        }
        ProblemInstance::new(
            scene,
            kinematics,
            &points(&self.goal.vertices),
            self.goal_effector,
            self.max_steps,
            self.yaw_angles_deg.as_deref(),
        )
    }

    /// Record of an instance whose surfaces are already inset.
    pub fn from_instance(instance: &ProblemInstance) -> Self {
        let k = &instance.kinematics;
        InstanceFile {
            surfaces: instance
                .scene
                .surfaces
                .iter()
                .map(|s| SurfaceRecord { id: s.id, vertices: raw(s.polygon.vertices()) })
                .collect(),
            kinematics: KinematicsRecord {
                reach_left_given_right: raw(k.reach_left_given_right().vertices()),
                reach_right_given_left: raw(k.reach_right_given_left().vertices()),
                foot_half_extents: k.foot_half_extents,
            },
            goal: GoalRecord { vertices: raw(instance.goal.vertices()) },
            goal_effector: instance.goal_effector,
            max_steps: instance.max_steps,
            yaw_angles_deg: if instance.yaw_angles.is_empty() {
                None
            } else {
                Some(instance.yaw_angles.iter().map(|a| a.to_degrees()).collect())
            },
            preinset: true,
        }
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance, SceneError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    file.into_instance()
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SceneError::Io { path: path.display().to_string(), source })?;
    parse_instance(&text).map_err(|e| match e {
        SceneError::Parse(msg) => SceneError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_instance(instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<(), SceneError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&InstanceFile::from_instance(instance))
        .map_err(|e| SceneError::Parse(e.to_string()))?;
    std::fs::write(path, text).map_err(|source| SceneError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::test_fixtures::TWO_SURFACES;

    #[test]
    fn parses_two_surface_file() {
        let inst = parse_instance(TWO_SURFACES).unwrap();
        assert_eq!(inst.scene.len(), 2);
        assert_eq!(inst.goal_surface, 1);
        assert_eq!(inst.max_steps, 2);
        assert!(inst.goal_region.is_point());
    }

    #[test]
    fn goal_outside_surfaces_is_rejected() {
        let text = TWO_SURFACES.replace("[[0.8, 0.2, 0.0]]", "[[5.0, 5.0, 0.0]]");
        assert!(matches!(parse_instance(&text), Err(SceneError::Validation(_))));
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = TWO_SURFACES.replace("\"max_steps\": 2", "\"max_stepz\": 2");
        match parse_instance(&text) {
            Err(SceneError::Parse(msg)) => {
                assert!(msg.contains("max_stepz"), "{msg}");
                assert!(msg.contains("line"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn downward_surface_is_rejected() {
        let text = TWO_SURFACES.replace(
            "[[-0.3,-0.5,0],[0.3,-0.5,0],[0.3,0.1,0],[-0.3,0.1,0]]",
            "[[-0.3,0.1,0],[0.3,0.1,0],[0.3,-0.5,0],[-0.3,-0.5,0]]",
        );
        let err = parse_instance(&text).unwrap_err().to_string();
        assert!(err.contains("surface 0"), "{err}");
    }

    #[test]
    fn save_load_round_trip() {
        let text = TWO_SURFACES.replace("[0.0, 0.0]", "[0.05, 0.02]");
        let inst = parse_instance(&text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        save_instance(&inst, &path).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn inset_is_applied_unless_preinset() {
        let text = TWO_SURFACES.replace("[0.0, 0.0]", "[0.05, 0.02]");
        let inset = parse_instance(&text).unwrap();
        let raw = parse_instance(&text.replace("\"max_steps\": 2", "\"max_steps\": 2, \"preinset\": true")).unwrap();
        let a = inset.scene.surfaces[0].polygon.area();
        let b = raw.scene.surfaces[0].polygon.area();
        assert!((b - 0.36).abs() < 1e-12);
        assert!((a - 0.5 * 0.5).abs() < 1e-12);
        for v in inset.scene.surfaces[0].polygon.vertices() {
            assert!(raw.scene.surfaces[0].polygon.contains(v));
        }
    }
}
