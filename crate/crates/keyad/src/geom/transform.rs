//! Rigid (SE(3)) transforms: rotation plus translation, no scale.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Tolerance on orthonormality and determinant of a rotation matrix.
pub const ROTATION_TOL: f64 = 1e-9;

/// A rotation + translation mapping one cloud's frame into another's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    /// Validates that `rotation` is a proper rotation (RᵀR = I, det = +1)
    /// within [`ROTATION_TOL`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let ortho_err = (gram - Matrix3::identity()).norm();
        if ortho_err > ROTATION_TOL * 10.0 {
            return Err(Error::invalid_argument(format!(
                "rotation is not orthonormal (|RtR - I| = {ortho_err:.2e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOL * 10.0 {
            return Err(Error::invalid_argument(format!(
                "rotation determinant {det} != +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds without validation; callers guarantee `rotation` came from a
    /// projection onto SO(3) (e.g. the Kabsch SVD).
    pub(crate) fn new_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation about `axis` by `angle` radians (Rodrigues), then translation.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(*axis),
            angle,
        )
        .into_inner();
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Frobenius distance between the two rotation matrices.
    pub fn rotation_distance(&self, other: &RigidTransform) -> f64 {
        (self.rotation - other.rotation).norm()
    }

    /// Euclidean distance between the two translations.
    pub fn translation_distance(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Rotation angle in radians (0 ≤ angle ≤ π).
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_then_inverse_is_identity() {
        let a = RigidTransform::from_axis_angle(
            &Vector3::new(1.0, 2.0, -0.5),
            0.7,
            Vector3::new(0.1, -0.2, 0.3),
        );
        let id = a.compose(&a.inverse());
        assert_relative_eq!(id.rotation(), &Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(id.translation().norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_matches_manual() {
        let t = RigidTransform::from_axis_angle(
            &Vector3::z(),
            std::f64::consts::FRAC_PI_2,
            Vector3::new(1.0, 0.0, 0.0),
        );
        let p = t.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p, Vector3::new(1.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rejects_reflection() {
        let mut m = Matrix3::identity();
        m[(0, 0)] = -1.0;
        assert!(RigidTransform::new(m, Vector3::zeros()).is_err());
    }

    #[test]
    fn rotation_angle_roundtrip() {
        let t = RigidTransform::from_axis_angle(&Vector3::y(), 0.9, Vector3::zeros());
        assert_relative_eq!(t.rotation_angle(), 0.9, epsilon = 1e-12);
    }
}
