//! Closed-form rigid alignment of point pairs (Kabsch / Umeyama without
//! scale).

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geom::transform::RigidTransform;

/// Determinant below which a correspondence triplet counts as collinear or
/// otherwise rank-deficient relative to its scale.
const DEGENERACY_TOL: f64 = 1e-12;

/// Least-squares rigid transform mapping `src[i]` onto `dst[i]`.
///
/// Centers both sets, takes the SVD of the cross-covariance, and corrects
/// the sign of the last column when the raw solution would be a reflection.
/// Fails on fewer than 3 pairs or a degenerate (rank < 2) configuration
/// where the rotation is not determined.
pub fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::invalid_argument(format!(
            "kabsch pair count mismatch: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateCorrespondences);
    }
    let n = src.len() as f64;
    let mut mu_s = Vector3::zeros();
    let mut mu_d = Vector3::zeros();
    for (s, d) in src.iter().zip(dst) {
        mu_s += s;
        mu_d += d;
    }
    mu_s /= n;
    mu_d /= n;

    let mut h = Matrix3::zeros();
    let mut scale = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let sc = s - mu_s;
        let dc = d - mu_d;
        h += dc * sc.transpose();
        scale += sc.norm_squared();
    }
    h /= n;
    scale /= n;

    // Rank check: two leading singular values must be meaningfully nonzero,
    // otherwise the pairs are collinear and rotation about the line is free.
    let svd = h.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::DegenerateCorrespondences),
    };
    if scale <= 0.0 || svd.singular_values[1] <= DEGENERACY_TOL * scale.max(1e-300) {
        return Err(Error::DegenerateCorrespondences);
    }

    let mut d_fix = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d_fix[(2, 2)] = -1.0;
    }
    let rotation = u * d_fix * vt;
    let translation = mu_d - rotation * mu_s;
    RigidTransform::new(rotation, translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_transform(rng: &mut ChaCha8Rng, max_angle: f64) -> RigidTransform {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0f64),
        );
        let angle = rng.random_range(-max_angle..max_angle);
        let t = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        RigidTransform::from_axis_angle(&axis, angle, t)
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn recovers_random_transforms_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let t = random_transform(&mut rng, std::f64::consts::PI);
            let src = random_points(&mut rng, 8);
            let dst: Vec<_> = src.iter().map(|p| t.apply(p)).collect();
            let got = kabsch(&src, &dst).unwrap();
            assert!(got.rotation_distance(&t) < 1e-9, "rotation off");
            assert!(got.translation_distance(&t) < 1e-9, "translation off");
        }
    }

    #[test]
    fn identity_for_identical_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 5);
        let t = kabsch(&pts, &pts).unwrap();
        assert!(t.rotation_distance(&RigidTransform::identity()) < 1e-12);
        assert!(t.translation().norm() < 1e-12);
    }

    #[test]
    fn rejects_collinear_triplets() {
        let src = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let dst = src.clone();
        assert!(matches!(
            kabsch(&src, &dst),
            Err(Error::DegenerateCorrespondences)
        ));
    }

    #[test]
    fn rejects_too_few_pairs() {
        let pts = vec![Vector3::zeros(), Vector3::x()];
        assert!(matches!(
            kabsch(&pts, &pts),
            Err(Error::DegenerateCorrespondences)
        ));
    }

    #[test]
    fn never_returns_a_reflection() {
        // Near-planar sets push the raw SVD solution toward a reflection;
        // the determinant fix must keep det = +1.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let src: Vec<Vector3<f64>> = (0..6)
                .map(|_| {
                    Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1e-4..1e-4),
                    )
                })
                .collect();
            let t = random_transform(&mut rng, 1.0);
            let mut dst: Vec<_> = src.iter().map(|p| t.apply(p)).collect();
            // Perturb so the problem is noisy rather than exact.
            for d in &mut dst {
                d.x += rng.random_range(-1e-3..1e-3);
                d.y += rng.random_range(-1e-3..1e-3);
                d.z += rng.random_range(-1e-3..1e-3);
            }
            let got = kabsch(&src, &dst).unwrap();
            assert!((got.rotation().determinant() - 1.0).abs() < 1e-9);
        }
    }
}
