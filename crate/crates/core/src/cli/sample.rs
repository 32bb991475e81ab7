//! Uniform random points on regions.

use rand::Rng;

use crate::geometry::{PlanarPolygon, Point3};

/// A point drawn uniformly from `region` (a point, segment or polygon).
pub fn point_in<R: Rng>(region: &PlanarPolygon, rng: &mut R) -> Point3 {
    let v = region.vertices();
    match v.len() {
        1 => v[0],
        2 => v[0] + rng.random::<f64>() * (v[1] - v[0]),
        _ => {
            // fan triangles from v[0], picked by area
            let areas: Vec<f64> = (1..v.len() - 1).map(|i| (v[i] - v[0]).cross(&(v[i + 1] - v[0])).norm()).collect();
            let total: f64 = areas.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut i = 0;
            while i + 1 < areas.len() && pick > areas[i] {
                pick -= areas[i];
                i += 1;
            }
            let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
            if s + t > 1.0 {
                s = 1.0 - s;
                t = 1.0 - t;
            }
            v[0] + s * (v[i + 1] - v[0]) + t * (v[i + 2] - v[0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_inside_and_cover() {
        let hex: Vec<Point3> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                Point3::new(a.cos(), a.sin(), 0.5 + 0.1 * a.cos())
            })
            .collect();
        let poly = PlanarPolygon::new(hex).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut right = 0;
        for _ in 0..2000 {
            let p = point_in(&poly, &mut rng);
            assert!(poly.contains(&p));
            right += (p.x > 0.0) as usize;
        }
        assert!((900..1100).contains(&right));
    }
}
