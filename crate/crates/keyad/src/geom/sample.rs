//! Subsampling strategies: farthest-point (FS), random (RS), and uniform
//! stride (US), plus the mean nearest-neighbor spacing used to scale radii.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::index::SpatialIndex;

/// The three subsampling strategies evaluated by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingStrategy {
    /// Uniform stride over storage order.
    Us,
    /// Random without replacement.
    Rs,
    /// Farthest-point sampling.
    #[default]
    Fs,
}

impl SamplingStrategy {
    pub fn sample(&self, cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
        match self {
            SamplingStrategy::Us => uniform_sample(cloud, m),
            SamplingStrategy::Rs => random_sample(cloud, m, seed),
            SamplingStrategy::Fs => farthest_point_sample(cloud, m, seed),
        }
    }
}

impl std::str::FromStr for SamplingStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "us" => Ok(SamplingStrategy::Us),
            "rs" => Ok(SamplingStrategy::Rs),
            "fs" => Ok(SamplingStrategy::Fs),
            other => Err(Error::invalid_argument(format!(
                "unknown sampling strategy '{other}' (expected us|rs|fs)"
            ))),
        }
    }
}

impl std::fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplingStrategy::Us => "us",
            SamplingStrategy::Rs => "rs",
            SamplingStrategy::Fs => "fs",
        })
    }
}

fn check_m(cloud: &PointCloud, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid_argument("sample count m must be >= 1"));
    }
    if m > cloud.len() {
        return Err(Error::invalid_argument(format!(
            "sample count m = {m} exceeds cloud size {}",
            cloud.len()
        )));
    }
    Ok(())
}

/// Farthest-point sampling. The first index is drawn from `seed`; each
/// subsequent pick maximizes the minimum distance to the chosen set, ties
/// broken by lowest index.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    check_m(cloud, m)?;
    let n = cloud.len();
    let pts = cloud.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);

    let mut chosen = Vec::with_capacity(m);
    chosen.push(first);
    // min_d2[i] = squared distance from point i to the chosen set.
    let mut min_d2: Vec<f64> = pts.iter().map(|p| (p - pts[first]).norm_squared()).collect();

    while chosen.len() < m {
        let mut best = 0usize;
        let mut best_d2 = -1.0;
        for (i, &d2) in min_d2.iter().enumerate() {
            if d2 > best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        chosen.push(best);
        let bp = pts[best];
        for (i, d2) in min_d2.iter_mut().enumerate() {
            let nd2 = (pts[i] - bp).norm_squared();
            if nd2 < *d2 {
                *d2 = nd2;
            }
        }
    }
    Ok(chosen)
}

/// `m` distinct indices drawn uniformly without replacement.
pub fn random_sample(cloud: &PointCloud, m: usize, seed: u64) -> Result<Vec<usize>> {
    check_m(cloud, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, cloud.len(), m).into_vec())
}

/// Every `floor(n/m)`-th index in storage order, starting at 0, truncated
/// to `m` entries.
pub fn uniform_sample(cloud: &PointCloud, m: usize) -> Result<Vec<usize>> {
    check_m(cloud, m)?;
    let stride = cloud.len() / m;
    Ok((0..m).map(|i| i * stride).collect())
}

/// Mean distance from each point to its nearest other point. The scale unit
/// for every radius default (FPFH, detector, ICP correspondence).
pub fn mean_nn_spacing(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::invalid_argument(
            "nearest-neighbor spacing needs at least 2 points",
        ));
    }
    let index = SpatialIndex::from_cloud(cloud)?;
    let mut total = 0.0;
    for p in cloud.points() {
        // Two neighbors: the first is the point itself at distance 0.
        let hits = index.knn(&[p.x, p.y, p.z], 2);
        total += hits[1].1;
    }
    Ok(total / cloud.len() as f64)
}
