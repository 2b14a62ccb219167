use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histdist::{Metric, PyramidWeights};
use crate::histfeat::BinningConfig;
use crate::spgraph::BoundaryCombination;
use crate::stcluster::GammaMode;
use crate::supereval::DEFAULT_BOUNDARY_TOLERANCE;
use crate::synth::{FRAMES_DIR, GT_DIR, SUPERPIXELS_DIR};

/// Algorithm knobs shared by the in-memory and file-based entry points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    pub binning: BinningConfig,
    pub boundary_mode: BoundaryCombination,
    /// Gaussian sigma applied before the Sobel and temporal-difference maps.
    pub boundary_sigma: f64,
    pub metric: Metric,
    pub pyramid: bool,
    pub pyramid_weights: PyramidWeights,
    /// Weight of the feature affinity in the geometric combination.
    pub alpha: f64,
    pub gamma: GammaMode,
    /// Cluster count; when absent the ground-truth segment count is used.
    pub k: Option<usize>,
    pub seed: u64,
    pub boundary_tolerance: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            binning: BinningConfig::default(),
            boundary_mode: BoundaryCombination::SpatialOnly,
            boundary_sigma: 1.0,
            metric: Metric::Chi2,
            pyramid: true,
            pyramid_weights: PyramidWeights::default(),
            alpha: 0.5,
            gamma: GammaMode::Median,
            k: None,
            seed: 0,
            boundary_tolerance: DEFAULT_BOUNDARY_TOLERANCE,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        self.binning.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if !(self.boundary_sigma >= 0.0 && self.boundary_sigma.is_finite()) {
            return Err(Error::param(format!("boundary sigma must be >= 0, got {}", self.boundary_sigma)));
        }
        if self.k == Some(0) {
            return Err(Error::param("k must be >= 1"));
        }
        if let GammaMode::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::param(format!("fixed gamma must be > 0, got {g}")));
            }
        }
        let w = self.pyramid_weights;
        if !(w.level0 >= 0.0 && w.level1 >= 0.0) {
            return Err(Error::param("pyramid weights must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub frames_dir: String,
    pub superpixels_dir: String,
    /// Ground truth used for `k` resolution and evaluation; skipped if missing.
    pub ground_truth_dir: Option<String>,
    /// Precomputed 16-bit spatial boundary maps replacing the Sobel estimate.
    pub boundary_dir: Option<String>,
    /// Compute metrics against the ground truth when it is present.
    pub evaluate: bool,
    pub write_affinity: bool,
    pub write_features: bool,
    #[serde(flatten)]
    pub params: SegmentParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::from("."),
            output: PathBuf::from("out"),
            frames_dir: FRAMES_DIR.into(),
            superpixels_dir: SUPERPIXELS_DIR.into(),
            ground_truth_dir: Some(GT_DIR.into()),
            boundary_dir: None,
            evaluate: true,
            write_affinity: false,
            write_features: false,
            params: SegmentParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn frames_path(&self) -> PathBuf {
        self.input.join(&self.frames_dir)
    }

    pub fn superpixels_path(&self) -> PathBuf {
        self.input.join(&self.superpixels_dir)
    }

    pub fn ground_truth_path(&self) -> Option<PathBuf> {
        self.ground_truth_dir.as_ref().map(|d| self.input.join(d))
    }

    pub fn boundary_path(&self) -> Option<PathBuf> {
        self.boundary_dir.as_ref().map(|d| self.input.join(d))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (what, path) in [("frames", self.frames_path()), ("superpixels", self.superpixels_path())] {
            if !path.is_dir() {
                return Err(Error::io(
                    &path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} directory not found")),
                ));
            }
        }
        Ok(())
    }
}
