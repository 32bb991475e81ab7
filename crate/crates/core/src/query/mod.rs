//! Online use of a built tree: point lookup, plan extraction, surface
//! invalidation and replanning.

mod index;
mod plan;

use thiserror::Error;

use crate::geometry::PlanarPolygon;
use crate::planner::NodeId;
use crate::scene::{Effector, SurfaceId};

pub use index::{build_index, find_nodes, SpatialIndex};
pub use plan::{extract_plan, invalidate_surface, replan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is invalid")]
    InvalidNode(NodeId),
    #[error("node {0} has no valid parent")]
    NoValidChain(NodeId),
    #[error("surface {0} does not exist")]
    UnknownSurface(SurfaceId),
}

/// One contact of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub node: NodeId,
    pub effector: Effector,
    pub surface_id: SurfaceId,
    /// Foot yaw in radians (0 without yaw).
    pub yaw: f64,
    pub region: PlanarPolygon,
}

/// Contacts from the start node down to the goal node. `entries[i]` is at
/// depth `steps() - i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePlan {
    pub entries: Vec<PlanEntry>,
}

impl SurfacePlan {
    /// Number of steps to the goal.
    pub fn steps(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn start(&self) -> &PlanEntry {
        &self.entries[0]
    }

    pub fn goal(&self) -> &PlanEntry {
        self.entries.last().expect("plans hold at least the goal")
    }

    pub fn surfaces(&self) -> Vec<SurfaceId> {
        self.entries.iter().map(|e| e.surface_id).collect()
    }
}
