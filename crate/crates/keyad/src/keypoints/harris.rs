//! Harris3D keypoint detection on the second-moment matrix of surface
//! normals.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::index::SpatialIndex;
use crate::keypoints::iss::greedy_nms;
use crate::keypoints::{DetectorTag, KeypointSet};

/// Harris corner response per point: det(M) - k * trace(M)^2 where M is
/// the unnormalized second-moment matrix of the neighborhood's normals,
/// M = sum n_j n_j^T over the radius neighborhood (self included).
///
/// The matrix is deliberately not divided by the neighbor count: unit
/// normals make the normalized trace identically 1, which pins the response
/// below zero for any positive k and turns a zero threshold into a reject-
/// all filter. Unnormalized, the response is positive exactly where the
/// determinant term outweighs the trace penalty, the usual corner
/// criterion, so `threshold = 0` separates corners from edges and faces.
/// The second moment is also insensitive to normal orientation flips since
/// n n^T = (-n)(-n)^T.
pub fn detect_harris3d(
    cloud: &PointCloud,
    radius: f64,
    k_harris: f64,
    threshold: f64,
    nms_radius: f64,
    percentile: f64,
) -> Result<KeypointSet> {
    if !(radius > 0.0) || !(nms_radius > 0.0) {
        return Err(Error::invalid_argument("harris radii must be > 0"));
    }
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::invalid_argument("harris percentile must lie in [0,100]"));
    }
    if !cloud.has_normals() {
        return Err(Error::invalid_argument(
            "detect_harris3d requires normals; run estimate_normals first",
        ));
    }
    let n = cloud.len();
    if n < 5 {
        return Err(Error::EmptyKeypoints);
    }
    let normals = cloud.normals().expect("checked above");
    let index = SpatialIndex::from_cloud(cloud)?;

    let responses: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let mut m = Matrix3::zeros();
            for (j, _) in index.radius(&[p.x, p.y, p.z], radius) {
                let nj = normals[j];
                m += nj * nj.transpose();
            }
            m.determinant() - k_harris * m.trace() * m.trace()
        })
        .collect();

    let mut candidates: Vec<(usize, f64)> = responses
        .iter()
        .enumerate()
        .filter(|&(_, r)| *r > threshold)
        .map(|(i, r)| (i, *r))
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyKeypoints);
    }

    // Keep only the top (100 - percentile) percent by response before NMS.
    if percentile > 0.0 {
        let mut sorted: Vec<f64> = candidates.iter().map(|&(_, r)| r).collect();
        sorted.sort_by(f64::total_cmp);
        let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
        let cut = sorted[rank.saturating_sub(1).min(sorted.len() - 1)];
        candidates.retain(|&(_, r)| r >= cut);
    }
    if candidates.is_empty() {
        return Err(Error::EmptyKeypoints);
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let positions = greedy_nms(cloud, &candidates, nms_radius);
    KeypointSet::new(positions, DetectorTag::Harris3d)
}
