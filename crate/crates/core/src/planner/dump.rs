//! Line-delimited JSON tree files.
//!
//! The first line is a header carrying the instance and build stats; each
//! following line is one node, in id order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{PlanarPolygon, Point3};
use crate::scene::{Effector, InstanceFile, ProblemInstance, SurfaceId};

use super::{BuildStats, FeasibilityTree, Node, NodeId, TreeFileError};

const FORMAT: &str = "nasplan-tree";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    merged: bool,
    stats: BuildStats,
    instance: InstanceFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: NodeId,
    depth: u32,
    effector: Effector,
    surface_id: SurfaceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    yaw: Option<u16>,
    parents: Vec<NodeId>,
    valid: bool,
    normal: [f64; 3],
    offset: f64,
    region: Vec<[f64; 3]>,
}

pub fn write_tree<W: Write>(tree: &FeasibilityTree, instance: &ProblemInstance, mut out: W) -> std::io::Result<()> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        merged: tree.merged(),
        stats: tree.stats.clone(),
        instance: InstanceFile::from_instance(instance),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for n in tree.nodes() {
        let rec = NodeRecord {
            id: n.id,
            depth: n.depth,
            effector: n.effector,
            surface_id: n.surface_id,
            yaw: n.yaw,
            parents: n.parents.clone(),
            valid: n.valid,
            normal: [n.region.normal().x, n.region.normal().y, n.region.normal().z],
            offset: n.region.offset(),
            region: n.region.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_tree(tree: &FeasibilityTree, instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<(), TreeFileError> {
    let path = path.as_ref();
    let io_err = |source| TreeFileError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    write_tree(tree, instance, BufWriter::new(file)).map_err(io_err)
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<(FeasibilityTree, ProblemInstance), TreeFileError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TreeFileError::Io { path: path.display().to_string(), source })?;
    read_tree(file)
}

fn invalid(msg: String) -> TreeFileError {
    TreeFileError::Invalid(msg)
}

/// Parses and checks a tree file: ids are consecutive, depths grow by layer,
/// parents sit one layer up and effectors alternate.
pub fn read_tree<R: Read>(input: R) -> Result<(FeasibilityTree, ProblemInstance), TreeFileError> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| TreeFileError::Parse { line: 1, msg: "empty file".into() })?;
    let first = first.map_err(|e| TreeFileError::Parse { line: 1, msg: e.to_string() })?;
    let header: Header =
        serde_json::from_str(&first).map_err(|e| TreeFileError::Parse { line: 1, msg: e.to_string() })?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(TreeFileError::Parse {
            line: 1,
            msg: format!("unsupported format {} v{}", header.format, header.version),
        });
    }
    let instance = header.instance.into_instance()?;

    let mut layers: Vec<Vec<Node>> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    let mut count = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| TreeFileError::Parse { line: lineno, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NodeRecord =
            serde_json::from_str(&line).map_err(|e| TreeFileError::Parse { line: lineno, msg: e.to_string() })?;
        if rec.id as usize != count {
            return Err(invalid(format!("line {lineno}: expected node id {count}, found {}", rec.id)));
        }
        let region = PlanarPolygon::from_parts(
            rec.region.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(),
            Point3::new(rec.normal[0], rec.normal[1], rec.normal[2]),
            rec.offset,
        )
        .map_err(|e| invalid(format!("node {}: {e}", rec.id)))?;
        let depth = rec.depth as usize;
        if depth == layers.len() {
            layers.push(Vec::new());
            starts.push(count);
        } else if depth + 1 != layers.len() {
            return Err(invalid(format!("node {}: depth {depth} out of order", rec.id)));
        }
        if depth == 0 && (count != 0 || !rec.parents.is_empty()) {
            return Err(invalid("the root must be the only depth-0 node".into()));
        }
        if depth > 0 {
            if rec.parents.is_empty() {
                return Err(invalid(format!("node {} has no parent", rec.id)));
            }
            for &p in &rec.parents {
                let parent = (p as usize)
                    .checked_sub(starts[depth - 1])
                    .and_then(|i| layers[depth - 1].get(i))
                    .ok_or_else(|| invalid(format!("node {}: parent {p} is not in layer {}", rec.id, depth - 1)))?;
                if parent.effector == rec.effector {
                    return Err(invalid(format!("node {}: effector does not alternate", rec.id)));
                }
            }
        }
        if let Some(y) = rec.yaw {
            if y as usize >= instance.yaw_angles.len() {
                return Err(invalid(format!("node {}: yaw index {y} out of range", rec.id)));
            }
        }
        layers[depth].push(Node {
            id: rec.id,
            effector: rec.effector,
            surface_id: rec.surface_id,
            region,
            parents: rec.parents,
            depth: rec.depth,
            yaw: rec.yaw,
            valid: rec.valid,
        });
        count += 1;
    }
    if layers.is_empty() {
        return Err(invalid("tree has no root node".into()));
    }
    let tree = FeasibilityTree::from_layers(layers, instance.yaw_angles.clone(), header.merged, header.stats);
    Ok((tree, instance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{build_tree, BuildOptions};
    use crate::scene::parse_instance;
    use crate::scene::test_fixtures::TWO_SURFACES;

    fn sample() -> (FeasibilityTree, ProblemInstance) {
        let mut inst = parse_instance(TWO_SURFACES).unwrap();
        inst.max_steps = 5;
        (build_tree(&inst, &BuildOptions::default()).unwrap(), inst)
    }

    fn dump(tree: &FeasibilityTree, inst: &ProblemInstance) -> String {
        let mut buf = Vec::new();
        write_tree(tree, inst, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let (tree, inst) = sample();
        let text = dump(&tree, &inst);
        assert_eq!(text.lines().count(), tree.len() + 1);
        let (back, inst2) = read_tree(text.as_bytes()).unwrap();
        assert_eq!(back, tree);
        assert_eq!(inst2, inst);
        assert_eq!(dump(&back, &inst2), text);
    }

    #[test]
    fn file_round_trip() {
        let (tree, inst) = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        save_tree(&tree, &inst, &path).unwrap();
        assert_eq!(load_tree(&path).unwrap().0, tree);
        assert!(matches!(load_tree(dir.path().join("missing")), Err(TreeFileError::Io { .. })));
    }

    #[test]
    fn broken_parent_link_is_rejected() {
        let (tree, inst) = sample();
        let text = dump(&tree, &inst).replace("\"parents\":[1]", "\"parents\":[0]");
        assert!(matches!(read_tree(text.as_bytes()), Err(TreeFileError::Invalid(_))));
    }

    #[test]
    fn garbage_line_reports_its_number() {
        let (tree, inst) = sample();
        let mut text = dump(&tree, &inst);
        text.push_str("{not json}\n");
        match read_tree(text.as_bytes()) {
            Err(TreeFileError::Parse { line, .. }) => assert_eq!(line, tree.len() + 2),
            other => panic!("{other:?}"),
        }
    }
}
