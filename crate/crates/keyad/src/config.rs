//! Run configuration: every hyperparameter of the pipeline with defaults,
//! TOML (de)serialization, and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::sample::SamplingStrategy;

/// Which keypoint detector seeds the clustering. `None` skips detection and
/// treats every point of the base cloud as a keypoint candidate, so the
/// subsampling strategy alone picks the centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    #[default]
    Iss,
    Harris3d,
    None,
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iss" => Ok(DetectorKind::Iss),
            "harris3d" => Ok(DetectorKind::Harris3d),
            "none" => Ok(DetectorKind::None),
            other => Err(Error::invalid_argument(format!(
                "unknown detector '{other}' (expected iss|harris3d|none)"
            ))),
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Iss => "iss",
            DetectorKind::Harris3d => "harris3d",
            DetectorKind::None => "none",
        })
    }
}

/// Which feature kinds participate in scoring. `RawFpfh` scores with both
/// and fuses the per-point results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FeatureSelection {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "fpfh")]
    Fpfh,
    #[serde(rename = "raw+fpfh")]
    #[default]
    RawFpfh,
}

impl FeatureSelection {
    pub fn uses_raw(&self) -> bool {
        matches!(self, FeatureSelection::Raw | FeatureSelection::RawFpfh)
    }

    pub fn uses_fpfh(&self) -> bool {
        matches!(self, FeatureSelection::Fpfh | FeatureSelection::RawFpfh)
    }
}

impl std::str::FromStr for FeatureSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(FeatureSelection::Raw),
            "fpfh" => Ok(FeatureSelection::Fpfh),
            "raw+fpfh" => Ok(FeatureSelection::RawFpfh),
            other => Err(Error::invalid_argument(format!(
                "unknown feature selection '{other}' (expected raw|fpfh|raw+fpfh)"
            ))),
        }
    }
}

impl std::fmt::Display for FeatureSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureSelection::Raw => "raw",
            FeatureSelection::Fpfh => "fpfh",
            FeatureSelection::RawFpfh => "raw+fpfh",
        })
    }
}

/// Object-score aggregation. `Eq14` takes the maximum over clusters of each
/// cluster's minimum point score; `Max` takes the plain maximum over all
/// point scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    #[default]
    Eq14,
    Max,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eq14" => Ok(AggregationMode::Eq14),
            "max" => Ok(AggregationMode::Max),
            other => Err(Error::invalid_argument(format!(
                "unknown aggregation '{other}' (expected eq14|max)"
            ))),
        }
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AggregationMode::Eq14 => "eq14",
            AggregationMode::Max => "max",
        })
    }
}

/// The normalizer D in the reweighting exponent exp(d / D). `Cardinality`
/// uses the test cluster's point count (the printed formula); `MeanTopK`
/// uses the mean of the K reference distances, which keeps the exponent
/// scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReweightNormalizer {
    #[default]
    Cardinality,
    MeanTopK,
}

/// Registration stage parameters. Radii expressed as factors are multiples
/// of the mean nearest-neighbor spacing of the target working cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    /// Which prototype anchors the shared frame.
    pub base_index: usize,
    /// Downsample budget for the clouds registration actually runs on.
    pub working_points: usize,
    /// How many working points enter FPFH matching and RANSAC.
    pub match_points: usize,
    pub ransac_iters: usize,
    pub ransac_confidence: f64,
    pub inlier_thresh_factor: f64,
    pub icp_max_corr_factor: f64,
    pub icp_tol: f64,
    pub icp_max_iters: usize,
    /// Below this fitness, inference warns but still scores the sample.
    pub min_fitness: f64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            base_index: 0,
            working_points: 20_000,
            match_points: 3_000,
            ransac_iters: 100_000,
            ransac_confidence: 0.999,
            inlier_thresh_factor: 1.5,
            icp_max_corr_factor: 3.0,
            icp_tol: 1e-6,
            icp_max_iters: 50,
            min_fitness: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IssConfig {
    pub salient_radius_factor: f64,
    pub nms_radius_factor: f64,
    pub gamma21: f64,
    pub gamma32: f64,
}

impl Default for IssConfig {
    fn default() -> Self {
        IssConfig {
            salient_radius_factor: 6.0,
            nms_radius_factor: 4.0,
            gamma21: 0.975,
            gamma32: 0.975,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarrisConfig {
    pub radius_factor: f64,
    pub nms_radius_factor: f64,
    pub k: f64,
    pub threshold: f64,
    /// Keep only responses at or above this percentile before NMS.
    pub percentile: f64,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        HarrisConfig {
            radius_factor: 6.0,
            nms_radius_factor: 4.0,
            k: 0.04,
            threshold: 0.0,
            percentile: 95.0,
        }
    }
}

/// Every knob of the pipeline in one serializable bundle. A TOML file with
/// any subset of the fields parses; missing fields take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Working resolution for prototypes.
    pub prototype_points: usize,
    /// Working resolution for test samples.
    pub test_points: usize,
    /// Number of subsampled keypoints, i.e. clusters.
    pub num_keypoints: usize,
    /// Neighbors for score interpolation back to full resolution.
    pub interp_k: usize,
    /// Neighbors K in the reweighting factor.
    pub reweight_k: usize,
    pub reweight_normalizer: ReweightNormalizer,
    /// Per-cluster reference bank size after pooling across prototypes.
    pub cluster_size: usize,
    /// Neighborhood size for normal estimation.
    pub normal_k: usize,
    /// FPFH radius as a multiple of the described cloud's mean NN spacing.
    pub fpfh_radius_factor: f64,
    /// Fusion weight on the raw-feature score.
    pub fusion_lambda: f64,
    /// Min-max normalize each score vector before fusing.
    pub normalize_scores: bool,
    pub detector: DetectorKind,
    pub sampling: SamplingStrategy,
    pub features: FeatureSelection,
    pub aggregation: AggregationMode,
    pub registration: RegistrationConfig,
    pub iss: IssConfig,
    pub harris: HarrisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            prototype_points: 20_000,
            test_points: 1_000,
            num_keypoints: 5,
            interp_k: 3,
            reweight_k: 3,
            reweight_normalizer: ReweightNormalizer::default(),
            cluster_size: 4_000,
            normal_k: 30,
            fpfh_radius_factor: 5.0,
            fusion_lambda: 0.01,
            normalize_scores: true,
            detector: DetectorKind::default(),
            sampling: SamplingStrategy::default(),
            features: FeatureSelection::default(),
            aggregation: AggregationMode::default(),
            registration: RegistrationConfig::default(),
            iss: IssConfig::default(),
            harris: HarrisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: usize) -> Result<()> {
            if v == 0 {
                return Err(Error::invalid_argument(format!("{name} must be >= 1")));
            }
            Ok(())
        }
        positive("prototype_points", self.prototype_points)?;
        positive("test_points", self.test_points)?;
        positive("num_keypoints", self.num_keypoints)?;
        positive("interp_k", self.interp_k)?;
        positive("reweight_k", self.reweight_k)?;
        positive("cluster_size", self.cluster_size)?;
        positive("registration.working_points", self.registration.working_points)?;
        positive("registration.match_points", self.registration.match_points)?;
        positive("registration.ransac_iters", self.registration.ransac_iters)?;
        positive("registration.icp_max_iters", self.registration.icp_max_iters)?;
        if self.normal_k < 3 {
            return Err(Error::invalid_argument("normal_k must be >= 3"));
        }
        if !(0.0..=1.0).contains(&self.fusion_lambda) {
            return Err(Error::invalid_argument("fusion_lambda must lie in [0,1]"));
        }
        if self.fpfh_radius_factor <= 0.0 {
            return Err(Error::invalid_argument("fpfh_radius_factor must be > 0"));
        }
        let reg = &self.registration;
        if !(0.0 < reg.ransac_confidence && reg.ransac_confidence < 1.0) {
            return Err(Error::invalid_argument(
                "registration.ransac_confidence must lie in (0,1)",
            ));
        }
        if reg.inlier_thresh_factor <= 0.0 || reg.icp_max_corr_factor <= 0.0 {
            return Err(Error::invalid_argument(
                "registration radius factors must be > 0",
            ));
        }
        if reg.icp_tol <= 0.0 {
            return Err(Error::invalid_argument("registration.icp_tol must be > 0"));
        }
        if !(0.0..=1.0).contains(&reg.min_fitness) {
            return Err(Error::invalid_argument(
                "registration.min_fitness must lie in [0,1]",
            ));
        }
        for (name, g) in [("iss.gamma21", self.iss.gamma21), ("iss.gamma32", self.iss.gamma32)] {
            if !(0.0 < g && g < 1.0) {
                return Err(Error::invalid_argument(format!("{name} must lie in (0,1)")));
            }
        }
        if self.iss.salient_radius_factor <= 0.0
            || self.iss.nms_radius_factor <= 0.0
            || self.harris.radius_factor <= 0.0
            || self.harris.nms_radius_factor <= 0.0
        {
            return Err(Error::invalid_argument("detector radius factors must be > 0"));
        }
        if !(0.0..=100.0).contains(&self.harris.percentile) {
            return Err(Error::invalid_argument(
                "harris.percentile must lie in [0,100]",
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidState(format!("config serialization failed: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let offset = e.span().map(|s| s.start as u64).unwrap_or(0);
            Error::ParseError {
                offset,
                message: format!("config parse failed: {}", e.message()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}
