//! Correspondence-based RANSAC for global rigid alignment.

use nalgebra::Vector3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::transform::RigidTransform;
use crate::registration::kabsch::kabsch;
use crate::registration::matching::CorrespondenceSet;
use crate::registration::RegistrationResult;

/// Hypotheses evaluated per parallel batch. Triplet sampling stays
/// sequential between batches so the draw sequence depends only on the
/// seed, never on thread timing.
const BATCH: usize = 256;

/// Edge-length similarity pre-check: each triangle side in the source must
/// be within this ratio of its counterpart in the destination.
const EDGE_RATIO: f64 = 0.9;

#[derive(Clone, Copy)]
struct Score {
    inliers: usize,
    rmse: f64,
    hyp: usize,
}

/// Total order: more inliers, then lower rmse, then earlier hypothesis.
fn better(a: &Score, b: &Score) -> bool {
    (a.inliers, std::cmp::Reverse(a.rmse.to_bits()), std::cmp::Reverse(a.hyp))
        > (b.inliers, std::cmp::Reverse(b.rmse.to_bits()), std::cmp::Reverse(b.hyp))
}

fn count_inliers(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    t: &RigidTransform,
    thresh: f64,
) -> (usize, f64) {
    let t2 = thresh * thresh;
    let mut inliers = 0;
    let mut sq_sum = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let r2 = (t.apply(s) - d).norm_squared();
        if r2 <= t2 {
            inliers += 1;
            sq_sum += r2;
        }
    }
    let rmse = if inliers > 0 { (sq_sum / inliers as f64).sqrt() } else { 0.0 };
    (inliers, rmse)
}

fn edge_lengths_similar(s: [&Vector3<f64>; 3], d: [&Vector3<f64>; 3]) -> bool {
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let es = (s[i] - s[j]).norm();
        let ed = (d[i] - d[j]).norm();
        if es < EDGE_RATIO * ed || ed < EDGE_RATIO * es {
            return false;
        }
    }
    true
}

/// Iterations after which a model with the given inlier fraction has been
/// found with probability `confidence`.
fn iterations_needed(inlier_fraction: f64, confidence: f64, cap: usize) -> usize {
    if inlier_fraction <= 0.0 {
        return cap;
    }
    let p_triplet = inlier_fraction.powi(3).min(1.0 - 1e-12);
    if p_triplet >= 1.0 - 1e-12 {
        return 1;
    }
    let n = (1.0 - confidence).ln() / (1.0 - p_triplet).ln();
    if n.is_finite() && n >= 0.0 {
        (n.ceil() as usize).clamp(1, cap)
    } else {
        cap
    }
}

/// Best rigid transform over randomly sampled 3-correspondence triplets,
/// each solved in closed form, scored by inlier count under `inlier_thresh`
/// and re-estimated on its full inlier set. Stops early once the running
/// best inlier fraction makes further sampling pointless at `confidence`.
pub fn ransac_global(
    src: &PointCloud,
    dst: &PointCloud,
    corr: &CorrespondenceSet,
    iters: usize,
    inlier_thresh: f64,
    seed: u64,
    confidence: f64,
) -> Result<RegistrationResult> {
    if corr.len() < 3 {
        return Err(Error::invalid_argument(format!(
            "ransac needs >= 3 correspondences, got {}",
            corr.len()
        )));
    }
    if !(inlier_thresh > 0.0) {
        return Err(Error::invalid_argument("inlier threshold must be > 0"));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::invalid_argument("confidence must lie in (0,1)"));
    }
    let n = corr.len();
    let src_pts: Vec<Vector3<f64>> = corr.pairs().iter().map(|&(s, _)| src.point(s)).collect();
    let dst_pts: Vec<Vector3<f64>> = corr.pairs().iter().map(|&(_, d)| dst.point(d)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Score, RigidTransform)> = None;
    let mut done = 0usize;
    let mut reached_confidence = false;

    while done < iters {
        let batch = BATCH.min(iters - done);
        let triplets: Vec<[usize; 3]> = (0..batch)
            .map(|_| {
                let idx = rand::seq::index::sample(&mut rng, n, 3);
                [idx.index(0), idx.index(1), idx.index(2)]
            })
            .collect();

        let batch_best = triplets
            .par_iter()
            .enumerate()
            .filter_map(|(o, tri)| {
                let s = [&src_pts[tri[0]], &src_pts[tri[1]], &src_pts[tri[2]]];
                let d = [&dst_pts[tri[0]], &dst_pts[tri[1]], &dst_pts[tri[2]]];
                if !edge_lengths_similar(s, d) {
                    return None;
                }
                let t = kabsch(
                    &[*s[0], *s[1], *s[2]],
                    &[*d[0], *d[1], *d[2]],
                )
                .ok()?;
                let (inliers, rmse) = count_inliers(&src_pts, &dst_pts, &t, inlier_thresh);
                Some((Score { inliers, rmse, hyp: done + o }, t))
            })
            .reduce_with(|a, b| if better(&a.0, &b.0) { a } else { b });

        if let Some(candidate) = batch_best {
            let replace = match &best {
                Some((score, _)) => better(&candidate.0, score),
                None => true,
            };
            if replace {
                best = Some(candidate);
            }
        }
        done += batch;

        if let Some((score, _)) = &best {
            let fraction = score.inliers as f64 / n as f64;
            if done >= iterations_needed(fraction, confidence, iters) {
                reached_confidence = true;
                break;
            }
        }
    }

    let Some((mut score, mut transform)) = best else {
        return Err(Error::DegenerateCorrespondences);
    };

    // Re-estimate on the full inlier set, keeping the refinement only if it
    // does not lose inliers.
    if score.inliers >= 3 {
        let t2 = inlier_thresh * inlier_thresh;
        let (mut ins, mut ind): (Vec<Vector3<f64>>, Vec<Vector3<f64>>) = (vec![], vec![]);
        for (s, d) in src_pts.iter().zip(&dst_pts) {
            if (transform.apply(s) - d).norm_squared() <= t2 {
                ins.push(*s);
                ind.push(*d);
            }
        }
        if let Ok(refined) = kabsch(&ins, &ind) {
            let (inliers, rmse) = count_inliers(&src_pts, &dst_pts, &refined, inlier_thresh);
            let refined_score = Score { inliers, rmse, hyp: score.hyp };
            if inliers > score.inliers || (inliers == score.inliers && rmse <= score.rmse) {
                transform = refined;
                score = refined_score;
            }
        }
    }

    Ok(RegistrationResult {
        transform,
        fitness: score.inliers as f64 / n as f64,
        inlier_rmse: score.rmse,
        converged: reached_confidence,
    })
}
