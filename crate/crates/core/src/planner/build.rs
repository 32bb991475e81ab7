use std::time::Instant;

use rayon::prelude::*;

use crate::geometry::Point3;
use crate::scene::{Effector, ProblemInstance};

use super::{feasible_nodes, feasible_nodes_yaw, merge_layer, BuildError, BuildStats, FeasibilityTree, Node};

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// Parents expanded per parallel batch; the budget is checked between batches.
const BATCH: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub merge: bool,
    /// Stop after the first layer holding a node of this effector that
    /// contains this point.
    pub stop_at: Option<(Point3, Effector)>,
    /// Maximum number of nodes in the tree.
    pub node_budget: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { merge: true, stop_at: None, node_budget: DEFAULT_NODE_BUDGET }
    }
}

fn hits(layer: &[Node], stop: &Option<(Point3, Effector)>) -> bool {
    match stop {
        Some((p, e)) => layer.iter().any(|n| n.effector == *e && n.region.contains(p)),
        None => false,
    }
}

/// Breadth-first expansion of `instance.max_steps` layers.
///
/// Nodes of one layer are expanded in parallel; results are concatenated in
/// parent order so the tree does not depend on scheduling.
pub fn build_tree(instance: &ProblemInstance, options: &BuildOptions) -> Result<FeasibilityTree, BuildError> {
    let started = Instant::now();
    let root = Node {
        id: 0,
        effector: instance.goal_effector,
        surface_id: instance.goal_surface,
        region: instance.goal_region.clone(),
        parents: Vec::new(),
        depth: 0,
        yaw: instance.uses_yaw().then_some(0),
        valid: true,
    };
    let mut stats = BuildStats {
        layer_counts: vec![1],
        raw_counts: vec![1],
        layer_ms: vec![started.elapsed().as_secs_f64() * 1e3],
        ..Default::default()
    };
    let mut layers: Vec<Vec<Node>> = vec![vec![root]];
    let mut total = 1usize;
    let mut stopped = hits(&layers[0], &options.stop_at);

    for depth in 1..=instance.max_steps {
        if stopped {
            break;
        }
        let t0 = Instant::now();
        let parents = layers.last().expect("root layer");
        let mut children: Vec<Node> = Vec::new();
        for batch in parents.chunks(BATCH) {
            let expanded: Vec<Vec<Node>> = batch
                .par_iter()
                .map(|n| if instance.uses_yaw() { feasible_nodes_yaw(n, instance) } else { feasible_nodes(n, instance) })
                .collect();
            children.extend(expanded.into_iter().flatten());
            if !options.merge && total + children.len() > options.node_budget {
                stats.layer_counts.push(children.len());
                stats.raw_counts.push(children.len());
                stats.layer_ms.push(t0.elapsed().as_secs_f64() * 1e3);
                stats.total_ms = started.elapsed().as_secs_f64() * 1e3;
                return Err(BuildError::NodeBudget { budget: options.node_budget, depth, stats });
            }
        }
        let raw = children.len();
        let mut layer = if options.merge { merge_layer(children) } else { children };
        for (i, node) in layer.iter_mut().enumerate() {
            node.id = (total + i) as u32;
        }
        total += layer.len();
        stats.layer_counts.push(layer.len());
        stats.raw_counts.push(raw);
        stats.layer_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        if total > options.node_budget {
            stats.total_ms = started.elapsed().as_secs_f64() * 1e3;
            return Err(BuildError::NodeBudget { budget: options.node_budget, depth, stats });
        }
        stopped = hits(&layer, &options.stop_at);
        layers.push(layer);
    }
    stats.stopped_early = stopped && layers.len() <= instance.max_steps;
    stats.total_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(FeasibilityTree::from_layers(layers, instance.yaw_angles.clone(), options.merge, stats))
}
