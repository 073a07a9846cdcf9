//! Point features: raw coordinates, FPFH descriptors, and score fusion.

pub mod fpfh;

pub use fpfh::fpfh_features;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;

/// The feature spaces scoring can run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Raw,
    Fpfh,
}

impl FeatureKind {
    pub fn dim(&self) -> usize {
        match self {
            FeatureKind::Raw => 3,
            FeatureKind::Fpfh => 33,
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureKind::Raw => "raw",
            FeatureKind::Fpfh => "fpfh",
        })
    }
}

/// Row-major matrix of per-point feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    kind: FeatureKind,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureKind, data: Vec<f64>) -> Result<Self> {
        if data.len() % kind.dim() != 0 {
            return Err(Error::invalid_argument(format!(
                "feature data length {} is not a multiple of dim {}",
                data.len(),
                kind.dim()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "non-finite feature value {bad}"
            )));
        }
        Ok(FeatureMatrix { kind, data })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Number of rows (points).
    pub fn len(&self) -> usize {
        self.data.len() / self.kind.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.kind.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.kind.dim())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let d = self.kind.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix { kind: self.kind, data }
    }
}

/// Fusion weight for combining raw and FPFH scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    lambda: f64,
}

impl FusionWeights {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid_argument(format!(
                "fusion lambda {lambda} outside [0,1]"
            )));
        }
        Ok(FusionWeights { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Each row is the point's xyz, bit-equal to the cloud coordinates.
pub fn raw_features(cloud: &PointCloud) -> Result<FeatureMatrix> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("raw_features"));
    }
    let mut data = Vec::with_capacity(cloud.len() * 3);
    for p in cloud.points() {
        data.extend_from_slice(&[p.x, p.y, p.z]);
    }
    FeatureMatrix::new(FeatureKind::Raw, data)
}

/// Convex combination `lambda * raw + (1 - lambda) * fpfh` per point.
pub fn fuse_scores(
    raw_scores: &[f64],
    fpfh_scores: &[f64],
    weights: FusionWeights,
) -> Result<Vec<f64>> {
    if raw_scores.len() != fpfh_scores.len() {
        return Err(Error::invalid_argument(format!(
            "score length mismatch: {} raw vs {} fpfh",
            raw_scores.len(),
            fpfh_scores.len()
        )));
    }
    let l = weights.lambda;
    Ok(raw_scores
        .iter()
        .zip(fpfh_scores)
        .map(|(r, f)| l * r + (1.0 - l) * f)
        .collect())
}

/// Maps scores onto [0,1] with the minimum at 0 and the maximum at 1.
/// Constant input maps to all zeros.
pub fn minmax_normalize(scores: &[f64]) -> Vec<f64> {
    let Some(&first) = scores.first() else {
        return Vec::new();
    };
    let (mut lo, mut hi) = (first, first);
    for &s in scores {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let span = hi - lo;
    if span <= 0.0 {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|&s| (s - lo) / span).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn raw_rows_are_the_coordinates() {
        let cloud = PointCloud::new(vec![
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(-0.5, 0.25, 0.125),
        ])
        .unwrap();
        let f = raw_features(&cloud).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.dim(), 3);
        assert_eq!(f.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(f.row(1), &[-0.5, 0.25, 0.125]);
    }

    #[test]
    fn raw_translates_with_cloud() {
        let cloud = PointCloud::new(vec![Vector3::new(1.0, 2.0, 3.0)]).unwrap();
        let t = crate::geom::transform::RigidTransform::from_axis_angle(
            &Vector3::z(),
            0.0,
            Vector3::new(10.0, 0.0, 0.0),
        );
        let f = raw_features(&cloud.transformed(&t)).unwrap();
        assert_eq!(f.row(0), &[11.0, 2.0, 3.0]);
    }

    #[test]
    fn fusion_boundaries_and_arithmetic() {
        let raw = [2.0, 4.0];
        let fpfh = [0.0, 0.0];
        let all_raw = fuse_scores(&raw, &fpfh, FusionWeights::new(1.0).unwrap()).unwrap();
        assert_eq!(all_raw, vec![2.0, 4.0]);
        let all_fpfh = fuse_scores(&raw, &fpfh, FusionWeights::new(0.0).unwrap()).unwrap();
        assert_eq!(all_fpfh, vec![0.0, 0.0]);
        let half = fuse_scores(&raw, &fpfh, FusionWeights::new(0.5).unwrap()).unwrap();
        assert_eq!(half, vec![1.0, 2.0]);
    }

    #[test]
    fn fusion_rejects_mismatch_and_bad_lambda() {
        assert!(FusionWeights::new(-0.1).is_err());
        assert!(FusionWeights::new(1.1).is_err());
        let w = FusionWeights::new(0.5).unwrap();
        assert!(fuse_scores(&[1.0], &[1.0, 2.0], w).is_err());
    }

    #[test]
    fn fusion_preserves_shared_ranking() {
        // Same ranking in both inputs must survive any lambda.
        let raw = [0.1, 0.5, 0.9, 0.3];
        let fpfh = [1.0, 5.0, 9.0, 3.0];
        for l in [0.0, 0.01, 0.5, 0.99, 1.0] {
            let fused = fuse_scores(&raw, &fpfh, FusionWeights::new(l).unwrap()).unwrap();
            let mut order: Vec<usize> = (0..4).collect();
            order.sort_by(|&a, &b| fused[a].total_cmp(&fused[b]));
            assert_eq!(order, vec![0, 3, 1, 2]);
        }
    }

    #[test]
    fn minmax_maps_extremes_and_constants() {
        let n = minmax_normalize(&[2.0, 6.0, 4.0]);
        assert_eq!(n, vec![0.0, 1.0, 0.5]);
        assert_eq!(minmax_normalize(&[3.0, 3.0, 3.0]), vec![0.0, 0.0, 0.0]);
        assert!(minmax_normalize(&[]).is_empty());
    }

    #[test]
    fn matrix_select_reorders_rows() {
        let m = FeatureMatrix::new(
            FeatureKind::Raw,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0],
        )
        .unwrap();
        let s = m.select(&[2, 0]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(0), &[2.0, 2.0, 2.0]);
        assert_eq!(s.row(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn matrix_rejects_ragged_or_nonfinite() {
        assert!(FeatureMatrix::new(FeatureKind::Raw, vec![1.0, 2.0]).is_err());
        assert!(FeatureMatrix::new(FeatureKind::Raw, vec![1.0, 2.0, f64::NAN]).is_err());
    }
}
