//! Convex polytope algebra used by the planner.
//!
//! Polytopes are stored in vertex form and carry a lazily derived half-space
//! form. Contact regions are convex polygons embedded in 3D planes
//! ([`PlanarPolygon`]). All values are immutable once built.

mod hull;
pub mod lp;
mod polygon;
mod polytope;
mod rotation;

use nalgebra::Vector3;
use thiserror::Error;

pub use hull::convex_hull;
pub use polygon::{chebyshev_ball, chebyshev_center, clip_polygon_by_polytope, inset_polygon, PlanarPolygon};
pub use polytope::{central_symmetry, contains, minkowski_sum, rotate_z, translate, HalfSpace, Polytope};
pub use rotation::{rotation_to_normal, Rotation3};

/// A position in meters.
pub type Point3 = Vector3<f64>;

/// Coplanarity and containment tolerance, meters.
pub const EPS_GEO: f64 = 1e-9;
/// Clipped polygons with an area below this are empty, square meters.
pub const EPS_AREA: f64 = 1e-12;
/// Angular tolerance used when clustering hull facet normals, radians.
pub const FACET_ANGLE_TOL: f64 = 1e-8;
/// Grid used for canonical vertex keys.
pub const CANONICAL_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("empty point set")]
    Empty,
    #[error("polygon is degenerate: {0}")]
    Degenerate(String),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("vertices are not coplanar (max deviation {0:e} m)")]
    NotCoplanar(f64),
}

pub(crate) fn all_finite(p: &Point3) -> bool {
    p.iter().all(|c| c.is_finite())
}

/// Integer key of a point snapped to the canonical grid.
pub fn canonical_key(p: &Point3) -> [i64; 3] {
    [
        (p.x / CANONICAL_RESOLUTION).round() as i64,
        (p.y / CANONICAL_RESOLUTION).round() as i64,
        (p.z / CANONICAL_RESOLUTION).round() as i64,
    ]
}

/// Lexicographically sorted canonical keys of a vertex set. Two regions with
/// equal keys are treated as the same set.
pub fn canonical_vertices(points: &[Point3]) -> Vec<[i64; 3]> {
    let mut keys: Vec<[i64; 3]> = points.iter().map(canonical_key).collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Two unit vectors orthogonal to `n` and to each other, with `u × v = n`.
/// Depends only on `n`, so every polygon on a plane shares the same frame.
pub(crate) fn plane_axes(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let u = helper.cross(n).normalize();
    let v = n.cross(&u);
    (u, v)
}
