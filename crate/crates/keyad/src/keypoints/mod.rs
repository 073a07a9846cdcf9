//! Keypoint detection and subsampling. Detected keypoints seed the Voronoi
//! partition that drives clustering, so detection runs once per model on
//! the base prototype, never on test samples.

pub mod harris;
pub mod iss;

pub use harris::detect_harris3d;
pub use iss::detect_iss;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::{DetectorKind, RunConfig};
use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::sample::{farthest_point_sample, SamplingStrategy};

/// Which detector produced a keypoint set. `None` means the set is simply
/// the source cloud's points (detection skipped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorTag {
    Iss,
    Harris3d,
    None,
}

impl From<DetectorKind> for DetectorTag {
    fn from(kind: DetectorKind) -> Self {
        match kind {
            DetectorKind::Iss => DetectorTag::Iss,
            DetectorKind::Harris3d => DetectorTag::Harris3d,
            DetectorKind::None => DetectorTag::None,
        }
    }
}

/// A non-empty set of salient positions.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    positions: Vec<Vector3<f64>>,
    tag: DetectorTag,
}

impl KeypointSet {
    pub fn new(positions: Vec<Vector3<f64>>, tag: DetectorTag) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyKeypoints);
        }
        for p in &positions {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::invalid_argument("non-finite keypoint position"));
            }
        }
        Ok(KeypointSet { positions, tag })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Vector3<f64> {
        self.positions[i]
    }

    pub fn tag(&self) -> DetectorTag {
        self.tag
    }

    pub fn to_cloud(&self) -> PointCloud {
        PointCloud::new(self.positions.clone()).expect("keypoints are finite")
    }
}

/// Subsamples a keypoint set down to `m` positions with the given strategy.
/// When fewer than `m` keypoints exist, returns them all and flags the
/// shortfall instead of failing.
pub fn subsample_keypoints(
    keys: &KeypointSet,
    m: usize,
    strategy: SamplingStrategy,
    seed: u64,
) -> Result<(KeypointSet, bool)> {
    if m == 0 {
        return Err(Error::invalid_argument("subsample count m must be >= 1"));
    }
    if m >= keys.len() {
        return Ok((keys.clone(), m > keys.len()));
    }
    let cloud = keys.to_cloud();
    let indices = strategy.sample(&cloud, m, seed)?;
    let positions = indices.iter().map(|&i| keys.position(i)).collect();
    Ok((KeypointSet::new(positions, keys.tag())?, false))
}

/// Outcome of keypoint selection for a model build.
#[derive(Debug, Clone)]
pub struct KeypointSelection {
    pub keypoints: KeypointSet,
    /// Detector found fewer than the requested count (or nothing) and the
    /// selection fell back to farthest-point sampling over the full cloud.
    pub fallback_used: bool,
    /// Fewer positions than requested even after fallback.
    pub shortfall: bool,
}

/// Runs the configured detector on `cloud`, subsamples to
/// `cfg.num_keypoints`, and falls back to farthest-point sampling over the
/// whole cloud when the detector comes up short. `spacing` is the cloud's
/// mean nearest-neighbor spacing, used to scale detector radii.
pub fn select_keypoints(
    cloud: &PointCloud,
    cfg: &RunConfig,
    spacing: f64,
) -> Result<KeypointSelection> {
    let m = cfg.num_keypoints;
    let detected: Result<KeypointSet> = match cfg.detector {
        DetectorKind::Iss => detect_iss(
            cloud,
            cfg.iss.salient_radius_factor * spacing,
            cfg.iss.nms_radius_factor * spacing,
            cfg.iss.gamma21,
            cfg.iss.gamma32,
        ),
        DetectorKind::Harris3d => detect_harris3d(
            cloud,
            cfg.harris.radius_factor * spacing,
            cfg.harris.k,
            cfg.harris.threshold,
            cfg.harris.nms_radius_factor * spacing,
            cfg.harris.percentile,
        ),
        DetectorKind::None => {
            KeypointSet::new(cloud.points().to_vec(), DetectorTag::None)
        }
    };
    match detected {
        Ok(keys) if keys.len() >= m || cfg.detector == DetectorKind::None => {
            let (keypoints, shortfall) = subsample_keypoints(&keys, m, cfg.sampling, cfg.seed)?;
            Ok(KeypointSelection { keypoints, fallback_used: false, shortfall })
        }
        Ok(_) | Err(Error::EmptyKeypoints) => {
            let m_eff = m.min(cloud.len());
            if m_eff == 0 {
                return Err(Error::EmptyInput("select_keypoints"));
            }
            let indices = farthest_point_sample(cloud, m_eff, cfg.seed)?;
            let positions = indices.iter().map(|&i| cloud.point(i)).collect();
            Ok(KeypointSelection {
                keypoints: KeypointSet::new(positions, DetectorTag::None)?,
                fallback_used: true,
                shortfall: m_eff < m,
            })
        }
        Err(e) => Err(e),
    }
}
