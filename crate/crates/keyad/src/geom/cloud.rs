//! Point-cloud container used throughout the crate.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::RigidTransform;

/// Tolerance on the unit length of a stored normal.
pub const NORMAL_UNIT_TOL: f64 = 1e-6;

/// An ordered set of 3D points with optional per-point unit normals.
///
/// Point indices are stable: every per-point artifact elsewhere in the crate
/// (features, scores, masks) is aligned to the storage order of `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    /// Builds a cloud without normals. All coordinates must be finite.
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::invalid_argument(format!(
                    "point {i} has non-finite coordinates"
                )));
            }
        }
        Ok(Self {
            points,
            normals: None,
        })
    }

    /// Builds a cloud with per-point normals; lengths must match and each
    /// normal must be unit within [`NORMAL_UNIT_TOL`].
    pub fn with_normals(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::invalid_argument(format!(
                "normal count {} != point count {}",
                normals.len(),
                points.len()
            )));
        }
        for (i, n) in normals.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite() && n.z.is_finite()) {
                return Err(Error::invalid_argument(format!(
                    "normal {i} has non-finite components"
                )));
            }
            if (n.norm() - 1.0).abs() > NORMAL_UNIT_TOL {
                return Err(Error::invalid_argument(format!(
                    "normal {i} has length {} (must be unit)",
                    n.norm()
                )));
            }
        }
        let mut cloud = Self::new(points)?;
        cloud.normals = Some(normals);
        Ok(cloud)
    }

    pub fn from_rows(rows: &[[f64; 3]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Vector3::new(r[0], r[1], r[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        self.points[i]
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// Drops the normal channel (e.g. before re-estimation).
    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    /// Selects a subset of points (and normals, when present) by index,
    /// preserving the order of `indices`.
    pub fn select(&self, indices: &[usize]) -> Self {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let normals = self
            .normals
            .as_ref()
            .map(|ns| indices.iter().map(|&i| ns[i]).collect());
        Self { points, normals }
    }

    /// Applies a rigid transform to every point; normals are rotated.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        let points = self.points.iter().map(|p| t.apply(p)).collect();
        let normals = self
            .normals
            .as_ref()
            .map(|ns| ns.iter().map(|n| t.rotation() * n).collect());
        Self { points, normals }
    }

    /// Arithmetic mean of the points.
    pub fn centroid(&self) -> Vector3<f64> {
        let mut c = Vector3::zeros();
        for p in &self.points {
            c += p;
        }
        c / self.points.len().max(1) as f64
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Some((lo, hi))
    }

    /// Diagonal length of the bounding box; a scale proxy for tolerances.
    pub fn diameter(&self) -> f64 {
        match self.bounds() {
            Some((lo, hi)) => (hi - lo).norm(),
            None => 0.0,
        }
    }
}
