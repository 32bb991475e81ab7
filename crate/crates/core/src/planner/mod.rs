//! Backward expansion of the feasible space from the goal.
//!
//! Layer `k` of a [`FeasibilityTree`] holds convex regions from which the goal
//! can be reached in exactly `k` steps, starting with the foot stored in the
//! node. Layers alternate effectors.

mod build;
mod dump;
mod expand;
mod merge;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PlanarPolygon, Point3};
use crate::scene::{Effector, SceneError, SurfaceId};

pub use build::{build_tree, BuildOptions, DEFAULT_NODE_BUDGET};
pub use dump::{load_tree, read_tree, save_tree, write_tree};
pub use expand::{feasible_nodes, feasible_nodes_yaw, reach_polytope, reach_polytope_at};
pub use merge::merge_layer;

pub type NodeId = u32;

/// Placeholder id carried by nodes that are not yet part of a tree.
pub const UNASSIGNED: NodeId = NodeId::MAX;

/// One convex feasible region at a given depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Foot in contact with `region`.
    pub effector: Effector,
    /// Surface holding the region. For the root this is the goal surface.
    pub surface_id: SurfaceId,
    pub region: PlanarPolygon,
    /// Nodes one layer closer to the goal. Empty only for the root.
    pub parents: Vec<NodeId>,
    pub depth: u32,
    /// Index into the tree's yaw angle set, when yaw is enabled.
    pub yaw: Option<u16>,
    pub(crate) valid: bool,
}

impl Node {
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    pub fn is_root(&self) -> bool {
        self.depth == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    /// Nodes kept per layer, root layer first.
    pub layer_counts: Vec<usize>,
    /// Children generated per layer before merging.
    pub raw_counts: Vec<usize>,
    /// Wall time spent on each layer, milliseconds.
    pub layer_ms: Vec<f64>,
    pub total_ms: f64,
    /// Expansion stopped at a layer containing the `stop_at` state.
    pub stopped_early: bool,
}

impl BuildStats {
    pub fn total_nodes(&self) -> usize {
        self.layer_counts.iter().sum()
    }

    /// Mean number of children per expanded node, per layer transition.
    pub fn branching(&self) -> Vec<f64> {
        self.layer_counts
            .iter()
            .zip(self.raw_counts.iter().skip(1))
            .map(|(&parents, &children)| if parents == 0 { 0.0 } else { children as f64 / parents as f64 })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("node budget of {budget} exceeded at depth {depth} ({} nodes built)", stats.total_nodes())]
    NodeBudget { budget: usize, depth: usize, stats: BuildStats },
}

#[derive(Debug, Error)]
pub enum TreeFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent tree: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Depth-indexed layers of nodes rooted at the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityTree {
    nodes: Vec<Node>,
    layers: Vec<Range<usize>>,
    yaw_angles: Vec<f64>,
    merged: bool,
    pub stats: BuildStats,
}

impl FeasibilityTree {
    /// All nodes, indexed by id.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id as usize)
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of layers, including the root layer.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, depth: usize) -> &[Node] {
        &self.nodes[self.layers[depth].clone()]
    }

    pub fn layer_counts(&self) -> Vec<usize> {
        self.layers.iter().map(|r| r.len()).collect()
    }

    pub fn merged(&self) -> bool {
        self.merged
    }

    /// Yaw angle set in radians; empty when yaw is disabled.
    pub fn yaw_angles(&self) -> &[f64] {
        &self.yaw_angles
    }

    /// Yaw of the foot stored in `node`, radians.
    pub fn yaw_of(&self, node: &Node) -> f64 {
        node.yaw.map_or(0.0, |i| self.yaw_angles[i as usize])
    }

    /// The first `layers` layers as a standalone tree.
    pub fn truncated(&self, layers: usize) -> FeasibilityTree {
        let layers = layers.clamp(1, self.layers.len());
        let end = self.layers[layers - 1].end;
        let mut stats = self.stats.clone();
        stats.layer_counts.truncate(layers);
        stats.raw_counts.truncate(layers);
        stats.layer_ms.truncate(layers);
        stats.total_ms = stats.layer_ms.iter().sum();
        FeasibilityTree {
            nodes: self.nodes[..end].to_vec(),
            layers: self.layers[..layers].to_vec(),
            yaw_angles: self.yaw_angles.clone(),
            merged: self.merged,
            stats,
        }
    }

    /// Valid nodes of `effector` whose region contains `p`, by linear scan.
    pub fn scan(&self, p: &Point3, effector: Effector) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.valid && n.effector == effector && n.region.contains(p))
            .map(|n| n.id)
            .collect()
    }

    pub(crate) fn set_valid(&mut self, id: NodeId, valid: bool) {
        self.nodes[id as usize].valid = valid;
    }

    pub(crate) fn from_layers(
        layers: Vec<Vec<Node>>,
        yaw_angles: Vec<f64>,
        merged: bool,
        stats: BuildStats,
    ) -> Self {
        let mut nodes = Vec::with_capacity(layers.iter().map(Vec::len).sum());
        let mut ranges = Vec::with_capacity(layers.len());
        for layer in layers {
            let start = nodes.len();
            nodes.extend(layer);
            ranges.push(start..nodes.len());
        }
        Self { nodes, layers: ranges, yaw_angles, merged, stats }
    }
}
