//! Intrinsic Shape Signatures keypoint detection.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::index::SpatialIndex;
use crate::keypoints::{DetectorTag, KeypointSet};

/// A candidate needs at least this many non-self neighbors for a stable
/// rank-3 scatter matrix.
const MIN_NEIGHBORS: usize = 4;

/// lambda3 below this fraction of lambda1 counts as numerically zero: the
/// scatter is rank 2 (locally flat) and the point carries no 3D saliency.
/// Without this cut, flat regions enter NMS with responses at the floating
/// point noise floor, and their ordering is not stable under rigid motion.
const MIN_EIG_RATIO: f64 = 1e-9;

/// Detects points whose weighted neighborhood scatter has three clearly
/// separated eigenvalues: lambda2/lambda1 < gamma21 and lambda3/lambda2 <
/// gamma32 (eigenvalues sorted descending), with lambda3 > 0. Survivors go
/// through greedy non-max suppression on lambda3 within `nms_radius`, so the
/// returned positions are pairwise at least `nms_radius` apart.
pub fn detect_iss(
    cloud: &PointCloud,
    salient_radius: f64,
    nms_radius: f64,
    gamma21: f64,
    gamma32: f64,
) -> Result<KeypointSet> {
    if !(salient_radius > 0.0) || !(nms_radius > 0.0) {
        return Err(Error::invalid_argument("iss radii must be > 0"));
    }
    for (name, g) in [("gamma21", gamma21), ("gamma32", gamma32)] {
        if !(0.0 < g && g < 1.0) {
            return Err(Error::invalid_argument(format!("iss {name} must lie in (0,1)")));
        }
    }
    let n = cloud.len();
    if n < 5 {
        return Err(Error::EmptyKeypoints);
    }
    let index = SpatialIndex::from_cloud(cloud)?;

    // Non-self neighborhoods within the salient radius, reused for both the
    // per-point weights and the scatter matrices.
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            index
                .radius(&[p.x, p.y, p.z], salient_radius)
                .into_iter()
                .filter_map(|(j, _)| (j != i).then_some(j))
                .collect()
        })
        .collect();

    // Inverse neighbor-count weights flatten the influence of dense spots.
    let weights: Vec<f64> = neighborhoods
        .iter()
        .map(|nb| 1.0 / (nb.len().max(1)) as f64)
        .collect();

    // lambda3 response for points passing the eigenvalue ratio tests.
    let responses: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nb = &neighborhoods[i];
            if nb.len() < MIN_NEIGHBORS {
                return None;
            }
            let p = cloud.point(i);
            let mut scatter = Matrix3::zeros();
            let mut wsum = 0.0;
            for &j in nb {
                let d: Vector3<f64> = cloud.point(j) - p;
                scatter += weights[j] * d * d.transpose();
                wsum += weights[j];
            }
            scatter /= wsum;
            let mut eig: Vec<f64> = scatter.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(|a, b| b.total_cmp(a));
            let (l1, l2, l3) = (eig[0], eig[1], eig[2]);
            if l1 <= 0.0 || l2 <= 0.0 || l3 <= MIN_EIG_RATIO * l1 {
                return None;
            }
            (l2 / l1 < gamma21 && l3 / l2 < gamma32).then_some(l3)
        })
        .collect();

    let mut candidates: Vec<(usize, f64)> = responses
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyKeypoints);
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let positions = greedy_nms(cloud, &candidates, nms_radius);
    KeypointSet::new(positions, DetectorTag::Iss)
}

/// Accepts candidates in response order, skipping any within `nms_radius`
/// of an already accepted one.
pub(crate) fn greedy_nms(
    cloud: &PointCloud,
    sorted_candidates: &[(usize, f64)],
    nms_radius: f64,
) -> Vec<Vector3<f64>> {
    let r2 = nms_radius * nms_radius;
    let mut accepted: Vec<Vector3<f64>> = Vec::new();
    for &(i, _) in sorted_candidates {
        let p = cloud.point(i);
        if accepted.iter().all(|q| (p - q).norm_squared() > r2) {
            accepted.push(p);
        }
    }
    accepted
}
