//! Registration-based, keypoint-guided anomaly detection for 3D point
//! clouds.
//!
//! The library builds a multi-prototype reference model from a handful of
//! clean scans and scores test scans against it. The stages are rigid
//! registration into a shared frame (feature-matched RANSAC followed by
//! point-to-plane ICP), a Voronoi partition of the working cloud seeded at
//! subsampled keypoints, per-cluster nearest-neighbor scoring in raw and
//! FPFH feature space with a consistency reweighting, and interpolation of
//! the working-resolution scores back onto the full-resolution cloud.

pub mod config;
pub mod error;
pub mod features;
pub mod geom;
pub mod keypoints;

pub use config::{
    AggregationMode, DetectorKind, FeatureSelection, ReweightNormalizer, RunConfig,
};
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureMatrix, FusionWeights};
pub use geom::{PointCloud, RigidTransform, SamplingStrategy, SpatialIndex};
pub use keypoints::{DetectorTag, KeypointSet};
