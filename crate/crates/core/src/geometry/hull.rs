use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;

use super::polytope::{HalfSpace, Polytope};
use super::{all_finite, canonical_key, plane_axes, GeometryError, Point3, EPS_GEO, FACET_ANGLE_TOL};

/// Convex hull of a point set of any affine dimension.
///
/// Returns the extreme points (duplicates and non-extreme points removed) and
/// the half-space form. Planar hulls are ordered counter-clockwise around
/// their normal.
pub fn convex_hull(points: &[Point3]) -> Result<Polytope, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    if !points.iter().all(all_finite) {
        return Err(GeometryError::NonFinite);
    }
    let pts = dedup(points);
    let frame = AffineFrame::detect(&pts);
    Ok(match frame {
        AffineFrame::Point(i) => {
            let v = vec![pts[i]];
            let facets = point_halfspaces(&pts[i]);
            Polytope::from_parts(v, 0, Some(facets))
        }
        AffineFrame::Segment(a, b) => {
            let v = vec![pts[a], pts[b]];
            let facets = segment_halfspaces(&pts[a], &pts[b]);
            Polytope::from_parts(v, 1, Some(facets))
        }
        AffineFrame::Plane(normal) => {
            let idx = planar_hull(&pts, &(0..pts.len()).collect::<Vec<_>>(), &normal);
            let v: Vec<Point3> = idx.iter().map(|&i| pts[i]).collect();
            let facets = polygon_halfspaces(&v, &normal);
            Polytope::from_parts(v, 2, Some(facets))
        }
        AffineFrame::Solid(seed) => {
            let (v, facets) = solid_hull(&pts, seed);
            Polytope::from_parts(v, 3, Some(facets))
        }
    })
}

/// Half-space form of a polytope given by its extreme points.
pub(crate) fn derive_halfspaces(vertices: &[Point3], dim: u8) -> Vec<HalfSpace> {
    match dim {
        0 => point_halfspaces(&vertices[0]),
        1 => segment_halfspaces(&vertices[0], &vertices[1]),
        _ => convex_hull(vertices)
            .map(|p| p.facets().to_vec())
            .unwrap_or_default(),
    }
}

fn dedup(points: &[Point3]) -> Vec<Point3> {
    let mut seen = HashSet::with_capacity(points.len());
    points
        .iter()
        .filter(|p| seen.insert(canonical_key(p)))
        .copied()
        .collect()
}

enum AffineFrame {
    Point(usize),
    Segment(usize, usize),
    Plane(Vector3<f64>),
    Solid([usize; 4]),
}

impl AffineFrame {
    fn detect(pts: &[Point3]) -> Self {
        let i0 = (0..pts.len())
            .min_by(|&a, &b| {
                let (p, q) = (&pts[a], &pts[b]);
                p.x.total_cmp(&q.x)
                    .then(p.y.total_cmp(&q.y))
                    .then(p.z.total_cmp(&q.z))
            })
            .unwrap();
        let p0 = pts[i0];
        let (i1, d1) = argmax(pts, |p| (p - p0).norm());
        if d1 <= EPS_GEO {
            return AffineFrame::Point(i0);
        }
        let u = (pts[i1] - p0) / d1;
        let (i2, d2) = argmax(pts, |p| {
            let w = p - p0;
            (w - u * w.dot(&u)).norm()
        });
        if d2 <= EPS_GEO {
            let (lo, _) = argmax(pts, |p| -(p - p0).dot(&u));
            let (hi, _) = argmax(pts, |p| (p - p0).dot(&u));
            return AffineFrame::Segment(lo, hi);
        }
        let n = u.cross(&(pts[i2] - p0)).normalize();
        let (i3, d3) = argmax(pts, |p| (p - p0).dot(&n).abs());
        if d3 <= EPS_GEO {
            return AffineFrame::Plane(newell_normal_of(pts, n));
        }
        AffineFrame::Solid([i0, i1, i2, i3])
    }
}

fn argmax(pts: &[Point3], f: impl Fn(&Point3) -> f64) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in pts.iter().enumerate() {
        let v = f(p);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Refines a rough plane normal from the hull polygon of coplanar points.
fn newell_normal_of(pts: &[Point3], rough: Vector3<f64>) -> Vector3<f64> {
    let idx = planar_hull(pts, &(0..pts.len()).collect::<Vec<_>>(), &rough);
    let poly: Vec<Point3> = idx.iter().map(|&i| pts[i]).collect();
    let n = newell(&poly);
    if n.norm() > 0.0 && n.dot(&rough) > 0.0 {
        n.normalize()
    } else {
        rough
    }
}

pub(crate) fn newell(poly: &[Point3]) -> Vector3<f64> {
    let mut n = Vector3::zeros();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    n
}

/// Strict 2D hull of `subset` projected along `normal`. Returns indices into
/// `pts`, counter-clockwise around `normal`, collinear points dropped.
pub(crate) fn planar_hull(pts: &[Point3], subset: &[usize], normal: &Vector3<f64>) -> Vec<usize> {
    let (ax, ay) = plane_axes(normal);
    let mut items: Vec<(f64, f64, usize)> = subset
        .iter()
        .map(|&i| (pts[i].dot(&ax), pts[i].dot(&ay), i))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    items.dedup_by(|a, b| (a.0 - b.0).abs() <= EPS_GEO && (a.1 - b.1).abs() <= EPS_GEO);
    if items.len() <= 2 {
        return items.iter().map(|t| t.2).collect();
    }
    // left turn test with a distance tolerance on the middle point
    let keeps_turn = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
        let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
        let base = ((b.0 - o.0).powi(2) + (b.1 - o.1).powi(2)).sqrt();
        cross > EPS_GEO * base
    };
    let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(2 * items.len());
    for p in items.iter() {
        while hull.len() >= 2 && !keeps_turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower = hull.len() + 1;
    for p in items.iter().rev().skip(1) {
        while hull.len() >= lower && !keeps_turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull.iter().map(|t| t.2).collect()
}

fn point_halfspaces(p: &Point3) -> Vec<HalfSpace> {
    let mut out = Vec::with_capacity(6);
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        out.push(HalfSpace::new(axis, axis.dot(p)));
        out.push(HalfSpace::new(-axis, -axis.dot(p)));
    }
    out
}

fn segment_halfspaces(a: &Point3, b: &Point3) -> Vec<HalfSpace> {
    let u = (b - a).normalize();
    let (p, q) = plane_axes(&u);
    vec![
        HalfSpace::new(u, u.dot(b)),
        HalfSpace::new(-u, -u.dot(a)),
        HalfSpace::new(p, p.dot(a)),
        HalfSpace::new(-p, -p.dot(a)),
        HalfSpace::new(q, q.dot(a)),
        HalfSpace::new(-q, -q.dot(a)),
    ]
}

/// Plane pair plus in-plane edge half-spaces of a CCW polygon.
pub(crate) fn polygon_halfspaces(poly: &[Point3], normal: &Vector3<f64>) -> Vec<HalfSpace> {
    let offset = poly.iter().map(|p| normal.dot(p)).sum::<f64>() / poly.len() as f64;
    let mut out = vec![HalfSpace::new(*normal, offset), HalfSpace::new(-normal, -offset)];
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let m = (b - a).cross(normal).normalize();
        out.push(HalfSpace::new(m, m.dot(&a)));
    }
    out
}

struct Face {
    v: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    area2: f64,
    alive: bool,
}

impl Face {
    fn new(pts: &[Point3], v: [usize; 3], fallback: Vector3<f64>) -> Self {
        let (a, b, c) = (pts[v[0]], pts[v[1]], pts[v[2]]);
        let cr = (b - a).cross(&(c - a));
        let area2 = cr.norm();
        let normal = if area2 > 0.0 { cr / area2 } else { fallback };
        Face { v, normal, offset: normal.dot(&a), area2, alive: true }
    }

    fn height(&self, p: &Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Incremental 3D hull, then facet clustering and vertex extraction.
fn solid_hull(pts: &[Point3], seed: [usize; 4]) -> (Vec<Point3>, Vec<HalfSpace>) {
    let [i0, i1, i2, i3] = seed;
    let mut faces: Vec<Face> = Vec::with_capacity(4 * pts.len());
    let above = (pts[i3] - pts[i0]).dot(&(pts[i1] - pts[i0]).cross(&(pts[i2] - pts[i0]))) > 0.0;
    let tets: [[usize; 3]; 4] = if above {
        [[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };
    for t in tets {
        faces.push(Face::new(pts, t, Vector3::z()));
    }

    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, p) in pts.iter().enumerate() {
        if seed.contains(&idx) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| faces[f].alive && faces[f].height(p) > EPS_GEO)
            .collect();
        if visible.is_empty() {
            continue;
        }
        edge_owner.clear();
        for &f in &visible {
            let v = faces[f].v;
            for k in 0..3 {
                edge_owner.insert((v[k], v[(k + 1) % 3]), f);
            }
        }
        let mut horizon: Vec<((usize, usize), usize)> = edge_owner
            .iter()
            .filter(|((a, b), _)| !edge_owner.contains_key(&(*b, *a)))
            .map(|(e, f)| (*e, *f))
            .collect();
        horizon.sort_unstable();
        for &f in &visible {
            faces[f].alive = false;
        }
        for ((a, b), f) in horizon {
            let fallback = faces[f].normal;
            faces.push(Face::new(pts, [a, b, idx], fallback));
        }
        if faces.len() > 8 * pts.len() {
            faces.retain(|f| f.alive);
        }
    }
    faces.retain(|f| f.alive);

    // cluster coplanar triangles into facets
    struct Cluster {
        normal: Vector3<f64>,
        offset: f64,
        best_area: f64,
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for f in &faces {
        let hit = clusters.iter_mut().find(|c| {
            c.normal.dot(&f.normal) > 0.0
                && c.normal.cross(&f.normal).norm() <= FACET_ANGLE_TOL
                && (c.offset - f.offset).abs() <= EPS_GEO
        });
        match hit {
            Some(c) => {
                if f.area2 > c.best_area {
                    c.normal = f.normal;
                    c.offset = f.offset;
                    c.best_area = f.area2;
                }
            }
            None => clusters.push(Cluster { normal: f.normal, offset: f.offset, best_area: f.area2 }),
        }
    }

    let mut corner_count = vec![0usize; pts.len()];
    let mut facets = Vec::with_capacity(clusters.len());
    let mut seen_sets: HashSet<Vec<usize>> = HashSet::new();
    for c in &clusters {
        let offset = pts.iter().map(|p| c.normal.dot(p)).fold(f64::NEG_INFINITY, f64::max);
        let on: Vec<usize> = (0..pts.len())
            .filter(|&i| c.normal.dot(&pts[i]) >= offset - EPS_GEO)
            .collect();
        if on.len() < 3 || !seen_sets.insert(on.clone()) {
            continue;
        }
        for i in planar_hull(pts, &on, &c.normal) {
            corner_count[i] += 1;
        }
        facets.push(HalfSpace::new(c.normal, offset));
    }
    let vertices = (0..pts.len())
        .filter(|&i| corner_count[i] > 0)
        .map(|i| pts[i])
        .collect();
    (vertices, facets)
}
