use nalgebra::Vector3;

use super::hull::{newell, planar_hull, polygon_halfspaces};
use super::lp::{self, Constraint, LpOutcome, Relation};
use super::polytope::{bounds_of, HalfSpace, Polytope};
use super::{all_finite, canonical_vertices, plane_axes, GeometryError, Point3, EPS_AREA, EPS_GEO};

/// Convex polygon lying in a plane of R³.
///
/// Vertices are counter-clockwise around `normal`. A polygon may degenerate
/// to a segment or a single point (goal sets do); it still carries the plane
/// it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPolygon {
    vertices: Vec<Point3>,
    normal: Vector3<f64>,
    offset: f64,
}

impl PlanarPolygon {
    /// Builds and validates a polygon from CCW vertices. The normal follows
    /// the winding.
    pub fn new(vertices: Vec<Point3>) -> Result<Self, GeometryError> {
        let poly = Self::from_raw(vertices)?;
        poly.check()?;
        Ok(poly)
    }

    /// Builds a polygon without the convexity and planarity checks. The
    /// normal is the Newell normal of the given winding.
    pub fn from_raw(vertices: Vec<Point3>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::Degenerate(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if !vertices.iter().all(all_finite) {
            return Err(GeometryError::NonFinite);
        }
        let n = newell(&vertices);
        let norm = n.norm();
        if norm <= 2.0 * EPS_AREA {
            return Err(GeometryError::Degenerate("zero area".into()));
        }
        let normal = n / norm;
        let offset = vertices.iter().map(|p| normal.dot(p)).sum::<f64>() / vertices.len() as f64;
        Ok(Self { vertices, normal, offset })
    }

    /// Convex hull of `points`, all assumed to lie on the plane with unit
    /// normal `normal`. Accepts a single point or collinear points.
    pub fn from_points_on_plane(points: &[Point3], normal: &Vector3<f64>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        if !points.iter().all(all_finite) || !all_finite(normal) {
            return Err(GeometryError::NonFinite);
        }
        let normal = normal.normalize();
        let offset = points.iter().map(|p| normal.dot(p)).sum::<f64>() / points.len() as f64;
        let dev = points
            .iter()
            .map(|p| (normal.dot(p) - offset).abs())
            .fold(0.0, f64::max);
        if dev > EPS_GEO {
            return Err(GeometryError::NotCoplanar(dev));
        }
        let idx = planar_hull(points, &(0..points.len()).collect::<Vec<_>>(), &normal);
        let vertices = idx.into_iter().map(|i| points[i]).collect();
        Ok(Self { vertices, normal, offset })
    }

    /// Reassembles a polygon from its stored fields, as written by a dump.
    /// Any vertex count is accepted; the result is checked.
    pub fn from_parts(vertices: Vec<Point3>, normal: Vector3<f64>, offset: f64) -> Result<Self, GeometryError> {
        if vertices.is_empty() {
            return Err(GeometryError::Empty);
        }
        if !vertices.iter().all(all_finite) || !all_finite(&normal) || !offset.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if (normal.norm() - 1.0).abs() > EPS_GEO {
            return Err(GeometryError::InvalidInput("plane normal is not unit length".into()));
        }
        let poly = Self { vertices, normal, offset };
        poly.check()?;
        Ok(poly)
    }

    pub fn point(p: Point3, normal: &Vector3<f64>) -> Self {
        let normal = normal.normalize();
        Self { vertices: vec![p], normal, offset: normal.dot(&p) }
    }

    /// Checks coplanarity, winding and convexity.
    pub fn check(&self) -> Result<(), GeometryError> {
        let dev = self
            .vertices
            .iter()
            .map(|p| (self.normal.dot(p) - self.offset).abs())
            .fold(0.0, f64::max);
        if dev > EPS_GEO {
            return Err(GeometryError::NotCoplanar(dev));
        }
        let n = self.vertices.len();
        if n < 3 {
            if n == 2 && (self.vertices[1] - self.vertices[0]).norm() <= EPS_GEO {
                return Err(GeometryError::Degenerate("repeated vertex".into()));
            }
            return Ok(());
        }
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            if (b - a).norm() <= EPS_GEO {
                return Err(GeometryError::Degenerate("repeated vertex".into()));
            }
            let turn = (b - a).cross(&(c - b)).dot(&self.normal);
            if turn < -EPS_GEO * (c - a).norm() {
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    /// Unit plane normal; the polygon is CCW around it.
    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    /// Plane offset: `normal · x = offset` on the polygon.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// 2D frame `(origin, u, v)` of the plane, with `u × v = normal`.
    pub fn frame(&self) -> (Point3, Vector3<f64>, Vector3<f64>) {
        let (u, v) = plane_axes(&self.normal);
        (self.normal * self.offset, u, v)
    }

    pub fn to_2d(&self, p: &Point3) -> (f64, f64) {
        let (o, u, v) = self.frame();
        ((p - o).dot(&u), (p - o).dot(&v))
    }

    pub fn from_2d(&self, x: f64, y: f64) -> Point3 {
        let (o, u, v) = self.frame();
        o + u * x + v * y
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices, &self.normal)
    }

    pub fn centroid(&self) -> Point3 {
        self.vertices.iter().sum::<Point3>() / self.vertices.len() as f64
    }

    pub fn bounds(&self) -> (Point3, Point3) {
        bounds_of(&self.vertices)
    }

    /// Largest distance from `center` to a vertex.
    pub fn radius_about(&self, center: &Point3) -> f64 {
        self.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max)
    }

    /// Sorted canonical vertex keys, used for region equality.
    pub fn canonical(&self) -> Vec<[i64; 3]> {
        canonical_vertices(&self.vertices)
    }

    /// Outward in-plane half-spaces of the edges (empty for points).
    pub fn edge_halfspaces(&self) -> Vec<HalfSpace> {
        match self.vertices.len() {
            1 => Vec::new(),
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let d = (b - a).normalize();
                vec![HalfSpace::new(d, d.dot(&b)), HalfSpace::new(-d, -d.dot(&a))]
            }
            _ => polygon_halfspaces(&self.vertices, &self.normal).split_off(2),
        }
    }

    /// Affine description for optimization: `(equalities, inequalities)`,
    /// each row `a · x (= | <=) b`. Points give three coordinate equalities,
    /// segments two, polygons the plane equation.
    pub fn linear_constraints(&self) -> (Vec<HalfSpace>, Vec<HalfSpace>) {
        match self.vertices.len() {
            1 => {
                let p = self.vertices[0];
                let eq = [Vector3::x(), Vector3::y(), Vector3::z()]
                    .into_iter()
                    .map(|a| HalfSpace::new(a, a.dot(&p)))
                    .collect();
                (eq, Vec::new())
            }
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let m = (b - a).normalize().cross(&self.normal);
                let eq = vec![
                    HalfSpace::new(self.normal, self.offset),
                    HalfSpace::new(m, m.dot(&a)),
                ];
                (eq, self.edge_halfspaces())
            }
            _ => (vec![HalfSpace::new(self.normal, self.offset)], self.edge_halfspaces()),
        }
    }

    /// Closed membership within [`EPS_GEO`].
    pub fn contains(&self, p: &Point3) -> bool {
        if (self.normal.dot(p) - self.offset).abs() > EPS_GEO {
            return false;
        }
        match self.vertices.len() {
            1 => (p - self.vertices[0]).norm() <= EPS_GEO,
            2 => distance_to_segment(p, &self.vertices[0], &self.vertices[1]) <= EPS_GEO,
            _ => self.edge_halfspaces().iter().all(|h| h.excess(p) <= EPS_GEO),
        }
    }

    pub fn to_polytope(&self) -> Polytope {
        super::convex_hull(&self.vertices).expect("polygon vertices are finite")
    }

    pub fn translated(&self, t: &Point3) -> PlanarPolygon {
        PlanarPolygon {
            vertices: self.vertices.iter().map(|v| v + t).collect(),
            normal: self.normal,
            offset: self.offset + self.normal.dot(t),
        }
    }

    /// Same polygon with the opposite winding and normal.
    pub fn reversed(&self) -> PlanarPolygon {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PlanarPolygon { vertices, normal: -self.normal, offset: -self.offset }
    }

    /// Clips against each half-space in turn. `None` when less than
    /// [`EPS_AREA`] survives.
    pub fn clip(&self, halfspaces: &[HalfSpace]) -> Option<PlanarPolygon> {
        let mut current = self.vertices.clone();
        for h in halfspaces {
            current = clip_one(&current, h);
            if current.is_empty() {
                return None;
            }
        }
        let cleaned = cleanup(current, &self.normal);
        if cleaned.len() < 3 || polygon_area(&cleaned, &self.normal) < EPS_AREA {
            return None;
        }
        Some(PlanarPolygon { vertices: cleaned, normal: self.normal, offset: self.offset })
    }
}

fn distance_to_segment(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn polygon_area(vertices: &[Point3], normal: &Vector3<f64>) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let mut acc = 0.0;
    for i in 1..vertices.len() - 1 {
        acc += (vertices[i] - o).cross(&(vertices[i + 1] - o)).dot(normal);
    }
    0.5 * acc
}

/// One Sutherland-Hodgman pass. Vertices within [`EPS_GEO`] of the boundary
/// count as inside, so untouched vertices keep their exact coordinates.
fn clip_one(poly: &[Point3], h: &HalfSpace) -> Vec<Point3> {
    let n = poly.len();
    let f: Vec<f64> = poly.iter().map(|p| h.excess(p)).collect();
    if f.iter().all(|&x| x <= EPS_GEO) {
        return poly.to_vec();
    }
    if f.iter().all(|&x| x > EPS_GEO) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (pin, cin) = (f[prev] <= EPS_GEO, f[i] <= EPS_GEO);
        if cin != pin {
            let t = f[prev] / (f[prev] - f[i]);
            out.push(poly[prev] + (poly[i] - poly[prev]) * t);
        }
        if cin {
            out.push(poly[i]);
        }
    }
    out
}

/// Drops repeated and collinear vertices.
fn cleanup(mut pts: Vec<Point3>, normal: &Vector3<f64>) -> Vec<Point3> {
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let mut drop = None;
        for i in 0..n {
            let a = pts[(i + n - 1) % n];
            let b = pts[i];
            let c = pts[(i + 1) % n];
            if (b - a).norm() <= EPS_GEO {
                drop = Some(i);
                break;
            }
            let base = (c - a).norm();
            let turn = (b - a).cross(&(c - b)).dot(normal);
            if base > EPS_GEO && turn.abs() <= EPS_GEO * base {
                drop = Some(i);
                break;
            }
        }
        match drop {
            Some(i) => {
                pts.remove(i);
            }
            None => return pts,
        }
    }
}

/// `region ∩ poly`, clipped against the half-space form of `poly`.
///
/// For a lower-dimensional `poly` the half-space form pins its affine hull,
/// so the result is non-empty only when that hull contains the region's
/// plane patch.
pub fn clip_polygon_by_polytope(region: &PlanarPolygon, poly: &Polytope) -> Option<PlanarPolygon> {
    region.clip(poly.facets())
}

/// Moves every edge inward by `margin`.
pub fn inset_polygon(region: &PlanarPolygon, margin: f64) -> Result<Option<PlanarPolygon>, GeometryError> {
    if !margin.is_finite() || margin < 0.0 {
        return Err(GeometryError::InvalidInput(format!("inset margin must be >= 0, got {margin}")));
    }
    if margin == 0.0 {
        return Ok(Some(region.clone()));
    }
    if region.vertices.len() < 3 {
        return Ok(None);
    }
    let shifted: Vec<HalfSpace> = region
        .edge_halfspaces()
        .into_iter()
        .map(|h| HalfSpace::new(h.normal, h.offset - margin))
        .collect();
    Ok(region.clip(&shifted))
}

/// Center of the largest inscribed circle, found by LP in the plane frame.
pub fn chebyshev_center(region: &PlanarPolygon) -> Point3 {
    chebyshev_ball(region).0
}

/// Chebyshev center and inscribed radius.
pub fn chebyshev_ball(region: &PlanarPolygon) -> (Point3, f64) {
    if region.vertices.len() < 3 {
        return (region.centroid(), 0.0);
    }
    let origin = region.centroid();
    let (_, u, v) = region.frame();
    let cons: Vec<Constraint> = region
        .edge_halfspaces()
        .iter()
        .map(|h| {
            Constraint::new(
                vec![h.normal.dot(&u), h.normal.dot(&v), 1.0],
                Relation::Le,
                h.offset - h.normal.dot(&origin),
            )
        })
        .collect();
    match lp::minimize(&[0.0, 0.0, -1.0], &cons, &[true, true, false]) {
        LpOutcome::Optimal { x, .. } => (origin + u * x[0] + v * x[1], x[2]),
        _ => (origin, 0.0),
    }
}
