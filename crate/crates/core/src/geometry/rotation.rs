use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, EPS_GEO};

/// Proper rotation of R³ (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Rotation by `theta` radians about the world z axis.
    pub fn about_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn compose(&self, rhs: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * rhs.0)
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix3::identity()
    }
}

/// Minimal-angle rotation taking +z onto the unit vector `n`.
///
/// The rotation axis is `z × n`. For `n ≈ -z` the axis is undefined and a
/// half turn about x is returned.
pub fn rotation_to_normal(n: &Vector3<f64>) -> Result<Rotation3, GeometryError> {
    if !n.iter().all(|c| c.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(GeometryError::InvalidInput(format!(
            "normal must be a unit vector, |n| = {norm}"
        )));
    }
    let n = n / norm;
    let cos = n.z;
    if (cos - 1.0).abs() <= EPS_GEO * EPS_GEO {
        return Ok(Rotation3::identity());
    }
    if (cos + 1.0).abs() <= 1e-12 {
        return Ok(Rotation3(Matrix3::new(
            1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0,
        )));
    }
    // Rodrigues with axis z × n = (-n.y, n.x, 0), unnormalized:
    // R = I + [k]x + [k]x² / (1 + cos)
    let k = Vector3::new(-n.y, n.x, 0.0);
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    let r = Matrix3::identity() + kx + kx * kx * (1.0 / (1.0 + cos));
    Ok(Rotation3(r))
}
