use std::collections::BTreeMap;

use crate::scene::{Effector, SurfaceId};

use super::Node;

type MergeKey = (SurfaceId, Option<u16>, Effector, Vec<[i64; 3]>);

/// Coalesces nodes with the same effector, surface, yaw and canonical region
/// into one node carrying the union of their parents. The output is sorted by
/// surface, yaw and canonical region; the first constituent's region is kept.
pub fn merge_layer(layer: Vec<Node>) -> Vec<Node> {
    let mut groups: BTreeMap<MergeKey, Node> = BTreeMap::new();
    for node in layer {
        let key = (node.surface_id, node.yaw, node.effector, node.region.canonical());
        match groups.get_mut(&key) {
            Some(kept) => kept.parents.extend_from_slice(&node.parents),
            None => {
                groups.insert(key, node);
            }
        }
    }
    groups
        .into_values()
        .map(|mut n| {
            n.parents.sort_unstable();
            n.parents.dedup();
            n
        })
        .collect()
}
