use std::fmt;

use super::{Scene, SurfaceId};
use crate::geometry::{EPS_AREA, EPS_GEO};

/// Problems found in a scene. None of them stop planning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Pairs of coplanar surfaces whose interiors intersect, with the shared area.
    pub overlaps: Vec<(SurfaceId, SurfaceId, f64)>,
    /// Surfaces whose polygon is not convex, not planar or degenerate.
    pub malformed: Vec<(SurfaceId, String)>,
    /// Surfaces whose normal points sideways or down (usually a clockwise winding).
    pub normal_issues: Vec<(SurfaceId, String)>,
    pub duplicate_ids: Vec<SurfaceId>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.overlaps.is_empty()
            && self.malformed.is_empty()
            && self.normal_issues.is_empty()
            && self.duplicate_ids.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return writeln!(f, "scene ok");
        }
        for id in &self.duplicate_ids {
            writeln!(f, "warning: duplicate surface id {id}")?;
        }
        for (id, msg) in &self.malformed {
            writeln!(f, "warning: surface {id} malformed: {msg}")?;
        }
        for (id, msg) in &self.normal_issues {
            writeln!(f, "warning: surface {id} normal: {msg}")?;
        }
        for (a, b, area) in &self.overlaps {
            writeln!(f, "warning: surfaces {a} and {b} overlap (area {area:.3e} m^2)")?;
        }
        Ok(())
    }
}

pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut ids: Vec<SurfaceId> = scene.surfaces.iter().map(|s| s.id).collect();
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] && report.duplicate_ids.last() != Some(&w[0]) {
            report.duplicate_ids.push(w[0]);
        }
    }

    for s in &scene.surfaces {
        if let Err(e) = s.polygon.check() {
            report.malformed.push((s.id, e.to_string()));
        } else if s.polygon.area() < EPS_AREA {
            report.malformed.push((s.id, "zero area".into()));
        }
        let n = s.polygon.normal();
        if n.z <= EPS_GEO {
            report.normal_issues.push((
                s.id,
                format!("({:.3}, {:.3}, {:.3}) does not point up; check vertex winding", n.x, n.y, n.z),
            ));
        }
    }

    for (i, a) in scene.surfaces.iter().enumerate() {
        for b in &scene.surfaces[i + 1..] {
            let (na, nb) = (a.polygon.normal(), b.polygon.normal());
            let parallel = na.cross(nb).norm() <= EPS_GEO;
            if !parallel {
                continue;
            }
            let on_plane = b.polygon.vertices().iter().all(|v| (na.dot(v) - a.polygon.offset()).abs() <= EPS_GEO);
            if !on_plane {
                continue;
            }
            if let Some(common) = a.polygon.clip(&b.polygon.edge_halfspaces()) {
                report.overlaps.push((a.id, b.id, common.area()));
            }
        }
    }
    report
}
