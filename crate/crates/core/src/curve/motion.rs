use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Isometry `x -> linear*x + translation` in two or three dimensions.
///
/// Planar motions are stored in the upper-left 2x2 block with the third
/// row and column set to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidMotion {
    pub dimension: usize,
    pub linear: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidMotion {
    pub fn new(dimension: usize, linear: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::DimensionMismatch { expected: 3, found: dimension });
        }
        let m = Self { dimension, linear, translation };
        let defect = m.orthogonality_defect();
        if defect > 1e-12 {
            return Err(Error::HypothesisViolated(format!("linear part not orthogonal (defect {defect:.3e})")));
        }
        Ok(m)
    }

    pub fn identity(dimension: usize) -> Self {
        Self { dimension, linear: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn translation2(t: Vector2<f64>) -> Self {
        Self { dimension: 2, linear: Matrix3::identity(), translation: Vector3::new(t.x, t.y, 0.0) }
    }

    /// Rotation by `angle` about the point `center`.
    pub fn rotation2(angle: f64, center: Vector2<f64>) -> Self {
        let (s, c) = angle.sin_cos();
        let linear = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let c3 = Vector3::new(center.x, center.y, 0.0);
        Self { dimension: 2, linear, translation: c3 - linear * c3 }
    }

    /// Rotation through 180 degrees about `center`: `x -> 2c - x`, with an exact linear part.
    pub fn point_reflection2(center: Vector2<f64>) -> Self {
        let linear = Matrix3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        Self { dimension: 2, linear, translation: Vector3::new(2.0 * center.x, 2.0 * center.y, 0.0) }
    }

    /// Mirror image across the x-axis.
    pub fn reflect_x_axis() -> Self {
        let linear = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        Self { dimension: 2, linear, translation: Vector3::zeros() }
    }

    /// Reflection about the plane through `point` with unit normal `normal`.
    pub fn reflection3(point: Vector3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let nn = normal.norm();
        if (nn - 1.0).abs() > 1e-10 {
            return Err(Error::BadNormal(nn));
        }
        let linear = Matrix3::identity() - 2.0 * normal * normal.transpose();
        Ok(Self { dimension: 3, linear, translation: point - linear * point })
    }

    /// Rotation by `angle` about the line through `point` with unit direction `direction`.
    pub fn rotation3(point: Vector3<f64>, direction: Vector3<f64>, angle: f64) -> Result<Self> {
        let dn = direction.norm();
        if (dn - 1.0).abs() > 1e-10 {
            return Err(Error::BadAxis(dn));
        }
        let (s, c) = angle.sin_cos();
        let k = direction.cross_matrix();
        let linear = Matrix3::identity() * c + k * s + direction * direction.transpose() * (1.0 - c);
        Ok(Self { dimension: 3, linear, translation: point - linear * point })
    }

    /// `max |A^T A - I|` entrywise.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.linear.transpose() * self.linear - Matrix3::identity()).abs().max()
    }

    pub fn is_proper(&self) -> bool {
        self.linear.determinant() > 0.0
    }

    /// Rotation angle of a proper planar motion.
    pub fn angle2(&self) -> f64 {
        self.linear[(1, 0)].atan2(self.linear[(0, 0)])
    }

    pub fn apply_point2(&self, x: &Vector2<f64>) -> Vector2<f64> {
        let y = self.linear * Vector3::new(x.x, x.y, 0.0) + self.translation;
        Vector2::new(y.x, y.y)
    }

    pub fn apply_vector2(&self, v: &Vector2<f64>) -> Vector2<f64> {
        let y = self.linear * Vector3::new(v.x, v.y, 0.0);
        Vector2::new(y.x, y.y)
    }

    pub fn apply_point3(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.linear * x + self.translation
    }

    pub fn apply_vector3(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.linear * v
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            dimension: self.dimension.max(other.dimension),
            linear: self.linear * other.linear,
            translation: self.linear * other.translation + self.translation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn point_reflection_is_half_turn() {
        let c = Vector2::new(0.5, -1.0);
        let r = RigidMotion::point_reflection2(c);
        let x = Vector2::new(2.0, 3.0);
        assert_eq!(r.apply_point2(&x), 2.0 * c - x);
        assert!(r.is_proper());
        assert!((r.angle2().abs() - PI).abs() < 1e-15);
    }

    #[test]
    fn rodrigues_rotation_fixes_axis() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        let d = Vector3::new(0.0, 0.6, 0.8);
        let r = RigidMotion::rotation3(p, d, 0.7).unwrap();
        assert!(r.orthogonality_defect() < 1e-14);
        assert!((r.apply_point3(&(p + 2.0 * d)) - (p + 2.0 * d)).norm() < 1e-14);
        let v = Vector3::new(1.0, 0.0, 0.0);
        assert!((r.apply_vector3(&v).dot(&v) - 0.7f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn reflection_rejects_non_unit_normal() {
        assert!(matches!(
            RigidMotion::reflection3(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0)),
            Err(Error::BadNormal(_))
        ));
        assert!(matches!(
            RigidMotion::rotation3(Vector3::zeros(), Vector3::new(0.0, 0.0, 0.5), 1.0),
            Err(Error::BadAxis(_))
        ));
    }

    #[test]
    fn non_orthogonal_linear_part_is_rejected() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidMotion::new(2, m, Vector3::zeros()).is_err());
    }
}
