use std::sync::OnceLock;

use nalgebra::Vector3;

use super::hull::{convex_hull, derive_halfspaces};
use super::lp::{self, Constraint, LpOutcome, Relation};
use super::rotation::Rotation3;
use super::{canonical_vertices, Point3, EPS_GEO};

/// `normal · x <= offset`, with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector3<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// Signed distance of `p` outside the half-space (positive = violated).
    pub fn excess(&self, p: &Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Convex hull of a finite point set in R³.
///
/// `vertices` are the extreme points. The half-space form is derived on first
/// use and carried through rigid transforms. Lower-dimensional polytopes get
/// a half-space form too: pairs of opposite half-spaces pin the affine hull,
/// the rest bound the set inside it.
#[derive(Debug, Clone)]
pub struct Polytope {
    vertices: Vec<Point3>,
    dim: u8,
    facets: OnceLock<Vec<HalfSpace>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && canonical_vertices(&self.vertices) == canonical_vertices(&other.vertices)
    }
}

impl Polytope {
    pub(crate) fn from_parts(vertices: Vec<Point3>, dim: u8, facets: Option<Vec<HalfSpace>>) -> Self {
        let cell = OnceLock::new();
        if let Some(f) = facets {
            let _ = cell.set(f);
        }
        Self { vertices, dim, facets: cell }
    }

    /// Vertices (columns of the vertex matrix).
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    /// Affine dimension, 0 to 3.
    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim == 3
    }

    pub fn facets(&self) -> &[HalfSpace] {
        self.facets.get_or_init(|| derive_halfspaces(&self.vertices, self.dim))
    }

    pub fn centroid(&self) -> Point3 {
        let sum: Point3 = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point3, Point3) {
        bounds_of(&self.vertices)
    }

    /// Applies a rotation about the origin.
    pub fn rotated(&self, r: &Rotation3) -> Polytope {
        if r.is_identity() {
            return self.clone();
        }
        let vertices = self.vertices.iter().map(|v| r.apply(v)).collect();
        let facets = self.facets.get().map(|fs| {
            fs.iter()
                .map(|h| HalfSpace::new(r.apply(&h.normal), h.offset))
                .collect()
        });
        Polytope::from_parts(vertices, self.dim, facets)
    }
}

pub(crate) fn bounds_of(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = Point3::repeat(f64::INFINITY);
    let mut hi = Point3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

pub fn translate(poly: &Polytope, t: &Point3) -> Polytope {
    let vertices = poly.vertices.iter().map(|v| v + t).collect();
    let facets = poly.facets.get().map(|fs| {
        fs.iter()
            .map(|h| HalfSpace::new(h.normal, h.offset + h.normal.dot(t)))
            .collect()
    });
    Polytope::from_parts(vertices, poly.dim, facets)
}

/// Point reflection through the origin, `v ↦ -v`.
pub fn central_symmetry(poly: &Polytope) -> Polytope {
    let vertices = poly.vertices.iter().map(|v| -v).collect();
    let facets = poly
        .facets
        .get()
        .map(|fs| fs.iter().map(|h| HalfSpace::new(-h.normal, h.offset)).collect());
    Polytope::from_parts(vertices, poly.dim, facets)
}

pub fn rotate_z(poly: &Polytope, theta: f64) -> Polytope {
    if theta == 0.0 {
        return poly.clone();
    }
    poly.rotated(&Rotation3::about_z(theta))
}

/// Hull of all pairwise vertex sums.
pub fn minkowski_sum(a: &Polytope, b: &Polytope) -> Polytope {
    if b.vertices.len() == 1 {
        return translate(a, &b.vertices[0]);
    }
    if a.vertices.len() == 1 {
        return translate(b, &a.vertices[0]);
    }
    let mut sums = Vec::with_capacity(a.vertices.len() * b.vertices.len());
    for va in &a.vertices {
        for vb in &b.vertices {
            sums.push(va + vb);
        }
    }
    convex_hull(&sums).expect("sums of finite vertices are finite and non-empty")
}

/// Closed-set membership within [`EPS_GEO`].
///
/// Full-dimensional polytopes are tested against their facets. Degenerate
/// ones solve the convex-combination feasibility problem `p = Pλ, Σλ = 1,
/// λ ≥ 0` with an L1 residual.
pub fn contains(poly: &Polytope, p: &Point3) -> bool {
    if poly.dim == 3 {
        return poly.facets().iter().all(|h| h.excess(p) <= EPS_GEO);
    }
    convex_combination_residual(poly.vertices(), p) <= EPS_GEO
}

/// Minimal `‖Pλ - p‖₁` over the simplex of weights.
pub(crate) fn convex_combination_residual(points: &[Point3], p: &Point3) -> f64 {
    let d = points.len();
    // variables: λ (d), then s⁺ (3), s⁻ (3)
    let nvar = d + 6;
    let mut cons = Vec::with_capacity(4);
    for axis in 0..3 {
        let mut row = vec![0.0; nvar];
        for (j, v) in points.iter().enumerate() {
            row[j] = v[axis];
        }
        row[d + axis] = 1.0;
        row[d + 3 + axis] = -1.0;
        cons.push(Constraint::new(row, Relation::Eq, p[axis]));
    }
    let mut sum = vec![0.0; nvar];
    sum[..d].iter_mut().for_each(|c| *c = 1.0);
    cons.push(Constraint::new(sum, Relation::Eq, 1.0));
    let mut cost = vec![0.0; nvar];
    cost[d..].iter_mut().for_each(|c| *c = 1.0);
    match lp::minimize(&cost, &cons, &vec![false; nvar]) {
        LpOutcome::Optimal { value, .. } => value.max(0.0),
        _ => f64::INFINITY,
    }
}
