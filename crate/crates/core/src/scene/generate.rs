//! Procedural scenes. Every generator is a pure function of its parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Scene, SceneError, Surface};
use crate::geometry::{PlanarPolygon, Point3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSpec {
    /// Flat rectangles climbing along +x.
    Staircase { steps: usize, rise: f64, run: f64, width: f64 },
    /// A `rows × cols` lattice of square stones with seeded jitter.
    SteppingStones {
        rows: usize,
        cols: usize,
        spacing: f64,
        size: f64,
        xy_jitter: f64,
        height_jitter: f64,
        seed: u64,
    },
    /// Square tiles separated by gaps, all at z = 0.
    FlatGrid { nx: usize, ny: usize, tile: f64, gap: f64 },
    /// `copies` translated copies of `base`; copy `i` is shifted by
    /// `i · offset`. Surfaces landing exactly on an existing one are dropped.
    Duplicate { base: Box<SceneSpec>, copies: usize, offset: [f64; 3] },
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64, z: f64) -> PlanarPolygon {
    PlanarPolygon::new(vec![
        Point3::new(x0, y0, z),
        Point3::new(x1, y0, z),
        Point3::new(x1, y1, z),
        Point3::new(x0, y1, z),
    ])
    .expect("axis-aligned rectangle with positive extent")
}

fn positive(name: &str, v: f64) -> Result<(), SceneError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SceneError::Params(format!("{name} must be positive, got {v}")))
    }
}

fn with_ids(polys: Vec<PlanarPolygon>) -> Scene {
    Scene::new(
        polys
            .into_iter()
            .enumerate()
            .map(|(i, polygon)| Surface { id: i as u32, polygon })
            .collect(),
    )
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SceneError> {
    match *spec {
        SceneSpec::Staircase { steps, rise, run, width } => {
            if steps == 0 {
                return Err(SceneError::Params("staircase needs at least one step".into()));
            }
            positive("run", run)?;
            positive("width", width)?;
            if !rise.is_finite() {
                return Err(SceneError::Params("rise must be finite".into()));
            }
            let polys = (0..steps)
                .map(|i| {
                    let x0 = i as f64 * run;
                    rect(x0, -width / 2.0, x0 + run, width / 2.0, i as f64 * rise)
                })
                .collect();
            Ok(with_ids(polys))
        }
        SceneSpec::SteppingStones { rows, cols, spacing, size, xy_jitter, height_jitter, seed } => {
            if rows == 0 || cols == 0 {
                return Err(SceneError::Params("stepping stones need rows, cols >= 1".into()));
            }
            positive("spacing", spacing)?;
            positive("size", size)?;
            if !(xy_jitter >= 0.0 && height_jitter >= 0.0) {
                return Err(SceneError::Params("jitter must be non-negative".into()));
            }
            if size + 2.0 * xy_jitter >= spacing {
                return Err(SceneError::Params(format!(
                    "stones of size {size} with jitter {xy_jitter} overlap at spacing {spacing}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut polys = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let mut jitter = |amp: f64| if amp > 0.0 { rng.random_range(-amp..amp) } else { 0.0 };
                    let cx = c as f64 * spacing + jitter(xy_jitter);
                    let cy = r as f64 * spacing + jitter(xy_jitter);
                    let z = jitter(height_jitter);
                    let h = size / 2.0;
                    polys.push(rect(cx - h, cy - h, cx + h, cy + h, z));
                }
            }
            Ok(with_ids(polys))
        }
        SceneSpec::FlatGrid { nx, ny, tile, gap } => {
            if nx == 0 || ny == 0 {
                return Err(SceneError::Params("flat grid needs nx, ny >= 1".into()));
            }
            positive("tile", tile)?;
            if gap.is_nan() || gap < 0.0 {
                return Err(SceneError::Params("gap must be non-negative".into()));
            }
            let pitch = tile + gap;
            let mut polys = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    let (x0, y0) = (i as f64 * pitch, j as f64 * pitch);
                    polys.push(rect(x0, y0, x0 + tile, y0 + tile, 0.0));
                }
            }
            Ok(with_ids(polys))
        }
        SceneSpec::Duplicate { ref base, copies, offset } => {
            if copies == 0 {
                return Err(SceneError::Params("duplicate needs copies >= 1".into()));
            }
            let base = generate_scene(base)?;
            let offset = Point3::new(offset[0], offset[1], offset[2]);
            let mut polys: Vec<PlanarPolygon> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for k in 0..copies {
                let shift = offset * k as f64;
                for s in &base.surfaces {
                    let p = s.polygon.translated(&shift);
                    if seen.insert(p.canonical()) {
                        polys.push(p);
                    }
                }
            }
            Ok(with_ids(polys))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate_scene;

    #[test]
    fn staircase_rectangles() {
        let s = generate_scene(&SceneSpec::Staircase { steps: 4, rise: 0.1, run: 0.3, width: 0.6 }).unwrap();
        assert_eq!(s.len(), 4);
        for (i, surf) in s.surfaces.iter().enumerate() {
            assert_eq!(surf.id, i as u32);
            assert!(surf.polygon.vertices().iter().all(|v| (v.z - 0.1 * i as f64).abs() < 1e-12));
            assert!((surf.polygon.area() - 0.18).abs() < 1e-12);
        }
        assert!(validate_scene(&s).is_clean());
    }

    #[test]
    fn stepping_stones_are_deterministic() {
        let spec = SceneSpec::SteppingStones {
            rows: 3,
            cols: 4,
            spacing: 0.5,
            size: 0.3,
            xy_jitter: 0.05,
            height_jitter: 0.05,
            seed: 11,
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert!(validate_scene(&a).is_clean());
        let other = generate_scene(&SceneSpec::SteppingStones {
            rows: 3,
            cols: 4,
            spacing: 0.5,
            size: 0.3,
            xy_jitter: 0.05,
            height_jitter: 0.05,
            seed: 12,
        })
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn duplicate_merges_coincident_surfaces() {
        // 22 surfaces in one row; shifting by 21 pitches overlaps one surface
        let base = SceneSpec::FlatGrid { nx: 22, ny: 1, tile: 0.3, gap: 0.1 };
        let dup = SceneSpec::Duplicate { base: Box::new(base.clone()), copies: 2, offset: [21.0 * 0.4, 0.0, 0.0] };
        assert_eq!(generate_scene(&dup).unwrap().len(), 43);
        let apart = SceneSpec::Duplicate { base: Box::new(base), copies: 2, offset: [0.0, 1.0, 0.0] };
        assert_eq!(generate_scene(&apart).unwrap().len(), 44);
    }

    #[test]
    fn invalid_params() {
        assert!(generate_scene(&SceneSpec::Staircase { steps: 0, rise: 0.1, run: 0.3, width: 0.6 }).is_err());
        assert!(generate_scene(&SceneSpec::FlatGrid { nx: 2, ny: 2, tile: -1.0, gap: 0.0 }).is_err());
        assert!(generate_scene(&SceneSpec::SteppingStones {
            rows: 2,
            cols: 2,
            spacing: 0.3,
            size: 0.3,
            xy_jitter: 0.0,
            height_jitter: 0.0,
            seed: 0
        })
        .is_err());
    }
}
