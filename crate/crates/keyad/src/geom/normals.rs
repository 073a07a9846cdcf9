//! Normal estimation by local PCA over k nearest neighbors.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::index::SpatialIndex;

/// Ratio below which the second eigenvalue counts as zero, i.e. the
/// neighborhood is collinear or degenerate and has no stable plane.
const DEGENERATE_EIG_RATIO: f64 = 1e-12;

/// Estimates unit normals from the covariance of each point's k nearest
/// neighbors (the point itself included). Normals are oriented away from the
/// cloud centroid. Returns the cloud with normals attached plus a per-point
/// flag marking degenerate neighborhoods that received the +z fallback.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<(PointCloud, Vec<bool>)> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("estimate_normals"));
    }
    if k < 3 {
        return Err(Error::invalid_argument("normal estimation needs k >= 3"));
    }
    let n = cloud.len();
    let k = k.min(n);
    let index = SpatialIndex::from_cloud(cloud)?;
    let centroid = cloud.centroid();

    let mut normals = vec![Vector3::zeros(); n];
    let mut degenerate = vec![false; n];

    use rayon::prelude::*;
    let results: Vec<(Vector3<f64>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let hits = index.knn(&[p.x, p.y, p.z], k);
            let mut mean = Vector3::zeros();
            for &(j, _) in &hits {
                mean += cloud.point(j);
            }
            mean /= hits.len() as f64;
            let mut cov = Matrix3::zeros();
            for &(j, _) in &hits {
                let d = cloud.point(j) - mean;
                cov += d * d.transpose();
            }
            cov /= hits.len() as f64;

            let eig = cov.symmetric_eigen();
            // nalgebra does not sort eigenvalues; find smallest and largest.
            let mut lo = 0;
            let mut hi = 0;
            for c in 1..3 {
                if eig.eigenvalues[c] < eig.eigenvalues[lo] {
                    lo = c;
                }
                if eig.eigenvalues[c] > eig.eigenvalues[hi] {
                    hi = c;
                }
            }
            let mid = 3 - lo - hi;
            let lambda_max = eig.eigenvalues[hi].max(0.0);
            let lambda_mid = eig.eigenvalues[mid].max(0.0);
            if lambda_max <= 0.0 || lambda_mid / lambda_max < DEGENERATE_EIG_RATIO {
                return (Vector3::z(), true);
            }
            let mut normal: Vector3<f64> = eig.eigenvectors.column(lo).into_owned();
            normal.normalize_mut();
            let outward = p - centroid;
            if normal.dot(&outward) < 0.0 {
                normal = -normal;
            }
            (normal, false)
        })
        .collect();

    for (i, (normal, flag)) in results.into_iter().enumerate() {
        normals[i] = normal;
        degenerate[i] = flag;
    }
    let with = PointCloud::with_normals(cloud.points().to_vec(), normals)?;
    Ok((with, degenerate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::transform::RigidTransform;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn plane_cloud() -> PointCloud {
        let mut pts = Vec::new();
        for x in 0..10 {
            for y in 0..10 {
                pts.push(Vector3::new(x as f64 * 0.1, y as f64 * 0.1, 0.5));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    fn sphere_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                let v = Vector3::new(
                    rng.random_range(-1.0..1.0f64),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                v.normalize()
            })
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn plane_normals_are_z() {
        let (cloud, flags) = estimate_normals(&plane_cloud(), 8).unwrap();
        assert!(flags.iter().all(|&f| !f));
        for n in cloud.normals().unwrap() {
            assert!(n.z.abs() > 0.999999, "normal {n:?} not along z");
        }
    }

    #[test]
    fn sphere_normals_point_radially_outward() {
        let cloud = sphere_cloud(500, 11);
        let (with, flags) = estimate_normals(&cloud, 12).unwrap();
        assert!(flags.iter().all(|&f| !f));
        for (p, n) in with.points().iter().zip(with.normals().unwrap()) {
            // For a unit sphere centered at origin the true normal is p.
            let dot = n.dot(&p.normalize());
            assert!(dot > 0.9, "normal misaligned: dot = {dot}");
        }
    }

    #[test]
    fn collinear_points_fall_back_to_z() {
        let pts = (0..20)
            .map(|i| Vector3::new(i as f64, 0.0, 0.0))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let (with, flags) = estimate_normals(&cloud, 5).unwrap();
        assert!(flags.iter().all(|&f| f));
        for n in with.normals().unwrap() {
            assert_eq!(*n, Vector3::z());
        }
    }

    #[test]
    fn normals_rotate_with_the_cloud() {
        let cloud = sphere_cloud(300, 5);
        let (base, _) = estimate_normals(&cloud, 10).unwrap();
        let t = RigidTransform::from_axis_angle(
            &Vector3::new(0.3, -0.5, 0.8),
            0.9,
            Vector3::new(0.1, 0.2, -0.3),
        );
        let (moved, _) = estimate_normals(&cloud.transformed(&t), 10).unwrap();
        let r = t.rotation();
        for (a, b) in base.normals().unwrap().iter().zip(moved.normals().unwrap()) {
            let expected = r * a;
            // Sign is fixed by the same outward rule on both sides, so the
            // rotated normal should match up to estimation noise.
            assert!(
                (expected - b).norm() < 1e-6,
                "rotation equivariance violated: {expected:?} vs {b:?}"
            );
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let cloud = plane_cloud();
        assert!(matches!(
            estimate_normals(&cloud, 2),
            Err(Error::InvalidArgument(_))
        ));
        let empty = PointCloud::new(Vec::new());
        assert!(empty.is_ok());
        assert!(matches!(
            estimate_normals(&empty.unwrap(), 5),
            Err(Error::EmptyInput(_))
        ));
    }
}
