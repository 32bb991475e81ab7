//! Static top-view SVG: surfaces, node regions tinted by depth, and a
//! footstep sequence.

use std::fmt::Write;

use crate::geometry::{PlanarPolygon, Point3};
use crate::planner::FeasibilityTree;
use crate::scene::{Effector, Scene};

const WIDTH: f64 = 900.0;
const PAD: f64 = 20.0;

struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn px(&self, p: &Point3) -> (f64, f64) {
        (PAD + (p.x - self.x0) * self.scale, PAD + (self.y1 - p.y) * self.scale)
    }

    fn points(&self, poly: &PlanarPolygon) -> String {
        poly.vertices()
            .iter()
            .map(|v| {
                let (x, y) = self.px(v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Renders `scene`, every region of `tree` and the footstep `path` (start
/// first, each with the foot placed there).
pub fn render(scene: &Scene, tree: &FeasibilityTree, path: &[(Point3, Effector)]) -> String {
    let (mut lo, mut hi) = (Point3::repeat(f64::INFINITY), Point3::repeat(f64::NEG_INFINITY));
    for s in &scene.surfaces {
        let (a, b) = s.polygon.bounds();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
    let view = View { x0: lo.x, y1: hi.y, scale: (WIDTH - 2.0 * PAD) / span };
    let w = 2.0 * PAD + (hi.x - lo.x) * view.scale;
    let h = 2.0 * PAD + (hi.y - lo.y) * view.scale;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#);
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for s in &scene.surfaces {
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#d9d9d9" stroke="#555555" stroke-width="1"><title>surface {}</title></polygon>"##,
            view.points(&s.polygon),
            s.id
        );
    }
    let depth = tree.num_layers().max(2) - 1;
    for n in tree.nodes().iter().filter(|n| n.is_valid() && !n.region.is_point()) {
        let hue = 240.0 * (1.0 - n.depth as f64 / depth as f64);
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="hsl({hue:.0},70%,55%)" fill-opacity="0.12" stroke="hsl({hue:.0},70%,40%)" stroke-opacity="0.4" stroke-width="0.5"/>"#,
            view.points(&n.region)
        );
    }
    if path.len() > 1 {
        let line: Vec<String> = path
            .iter()
            .map(|(p, _)| {
                let (x, y) = view.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#222222" stroke-width="1.5"/>"##, line.join(" "));
    }
    for (i, (p, e)) in path.iter().enumerate() {
        let (x, y) = view.px(p);
        let color = match e {
            Effector::Left => "#1f5fd1",
            Effector::Right => "#d1361f",
        };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{color}"><title>{i}: {e:?}</title></circle>"#);
    }
    out.push_str("</svg>\n");
    out
}
