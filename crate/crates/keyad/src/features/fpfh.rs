//! Fast Point Feature Histograms.
//!
//! Each point gets a 33-dimensional descriptor: three 11-bin histograms over
//! the Darboux-frame pair angles (alpha, phi, theta), laid out in that block
//! order. The computation runs in two passes. The first builds a simplified
//! histogram (SPFH) per point from its radius neighbors; the second sums
//! each point's SPFH with its neighbors' SPFHs weighted by inverse distance
//! and renormalizes every block to sum 100.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::index::SpatialIndex;

pub const FPFH_BINS: usize = 11;
pub const FPFH_DIM: usize = 3 * FPFH_BINS;

/// Darboux pair angles (alpha, phi, theta) for an ordered point pair.
///
/// The source of the frame is whichever point's normal is better aligned
/// with the connecting line; phi carries the sign flip when the roles swap.
/// Returns None for coincident points or a normal parallel to the line,
/// where the frame is undefined.
pub fn pair_angles(
    p1: &Vector3<f64>,
    n1: &Vector3<f64>,
    p2: &Vector3<f64>,
    n2: &Vector3<f64>,
) -> Option<(f64, f64, f64)> {
    let mut d = p2 - p1;
    let dist = d.norm();
    if dist == 0.0 {
        return None;
    }
    let a1 = n1.dot(&d) / dist;
    let a2 = n2.dot(&d) / dist;
    let (u, n_other, phi) = if a1.abs() < a2.abs() {
        d = -d;
        (*n2, *n1, -a2)
    } else {
        (*n1, *n2, a1)
    };
    let mut v = d.cross(&u);
    let vn = v.norm();
    if vn == 0.0 {
        return None;
    }
    v /= vn;
    let w = u.cross(&v);
    let alpha = v.dot(&n_other);
    let theta = w.dot(&n_other).atan2(u.dot(&n_other));
    Some((alpha, phi, theta))
}

fn bin_unit(x: f64) -> usize {
    // x in [-1, 1] onto 11 bins.
    let b = (FPFH_BINS as f64 * (x + 1.0) * 0.5).floor() as isize;
    b.clamp(0, FPFH_BINS as isize - 1) as usize
}

fn bin_angle(x: f64) -> usize {
    // x in [-pi, pi] onto 11 bins.
    let b = (FPFH_BINS as f64 * (x + std::f64::consts::PI)
        / (2.0 * std::f64::consts::PI))
        .floor() as isize;
    b.clamp(0, FPFH_BINS as isize - 1) as usize
}

fn accumulate_pair(hist: &mut [f64; FPFH_DIM], angles: (f64, f64, f64), incr: f64) {
    let (alpha, phi, theta) = angles;
    hist[bin_unit(alpha)] += incr;
    hist[FPFH_BINS + bin_unit(phi)] += incr;
    hist[2 * FPFH_BINS + bin_angle(theta)] += incr;
}

fn spfh(cloud: &PointCloud, i: usize, neighbors: &[(usize, f64)]) -> [f64; FPFH_DIM] {
    let normals = cloud.normals().expect("caller checked normals");
    let mut hist = [0.0; FPFH_DIM];
    let incr = 100.0 / neighbors.len() as f64;
    let p = cloud.point(i);
    let n = normals[i];
    for &(j, _) in neighbors {
        if let Some(angles) = pair_angles(&p, &n, &cloud.point(j), &normals[j]) {
            accumulate_pair(&mut hist, angles, incr);
        }
    }
    hist
}

fn normalize_blocks(hist: &mut [f64; FPFH_DIM]) {
    for block in hist.chunks_exact_mut(FPFH_BINS) {
        let sum: f64 = block.iter().sum();
        if sum > 0.0 {
            let scale = 100.0 / sum;
            for v in block {
                *v *= scale;
            }
        }
    }
}

use crate::features::{FeatureKind, FeatureMatrix};

/// FPFH descriptor per point over the given radius. Points with fewer than
/// two radius neighbors get an all-zero row and a raised isolated flag.
pub fn fpfh_features(cloud: &PointCloud, radius: f64) -> Result<(FeatureMatrix, Vec<bool>)> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("fpfh_features"));
    }
    if !cloud.has_normals() {
        return Err(Error::invalid_argument("fpfh_features requires normals"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid_argument("fpfh radius must be > 0"));
    }
    let index = SpatialIndex::from_cloud(cloud)?;
    let n = cloud.len();

    // Radius neighborhoods with the query point itself removed.
    let neighborhoods: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            index
                .radius(&[p.x, p.y, p.z], radius)
                .into_iter()
                .filter(|&(j, _)| j != i)
                .collect()
        })
        .collect();

    let isolated: Vec<bool> = neighborhoods.iter().map(|nb| nb.len() < 2).collect();

    let spfhs: Vec<[f64; FPFH_DIM]> = (0..n)
        .into_par_iter()
        .map(|i| {
            if isolated[i] {
                [0.0; FPFH_DIM]
            } else {
                spfh(cloud, i, &neighborhoods[i])
            }
        })
        .collect();

    let rows: Vec<[f64; FPFH_DIM]> = (0..n)
        .into_par_iter()
        .map(|i| {
            if isolated[i] {
                return [0.0; FPFH_DIM];
            }
            let nb = &neighborhoods[i];
            let mut hist = spfhs[i];
            let k = nb.len() as f64;
            let mut weighted = [0.0; FPFH_DIM];
            for &(j, d) in nb {
                if d == 0.0 {
                    continue;
                }
                let w = 1.0 / d;
                for (acc, v) in weighted.iter_mut().zip(&spfhs[j]) {
                    *acc += w * v;
                }
            }
            for (h, w) in hist.iter_mut().zip(&weighted) {
                *h += w / k;
            }
            normalize_blocks(&mut hist);
            hist
        })
        .collect();

    let mut data = Vec::with_capacity(n * FPFH_DIM);
    for row in &rows {
        data.extend_from_slice(row);
    }
    Ok((FeatureMatrix::new(FeatureKind::Fpfh, data)?, isolated))
}
