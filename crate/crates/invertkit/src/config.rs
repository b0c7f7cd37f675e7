//! Resolved run configuration. Every command is first turned into a
//! `RunConfig`, written next to its outputs as `run.toml`, then executed
//! from it, so `invertkit run --config run.toml` repeats the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RUN_FILE: &str = "run.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Extract,
    Train,
    TrainEncoder,
    Invert,
    Evaluate,
    Perturb,
    Interpolate,
    FitDistribution,
    Sample,
    Synth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub image_dir: PathBuf,
    /// (width, height) in pixels.
    pub target_size: [usize; 2],
    /// Fraction of images used for training; the rest form the test split.
    pub split: f64,
    /// Features are computed on the grayscale image (shallow extractors).
    pub grayscale_features: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    /// hog, lbp, sift or encoder_layer.
    pub kind: String,
    /// Cell size in pixels (HOG, LBP) or grid spacing (SIFT).
    pub cell: usize,
    /// Encoder checkpoint for `encoder_layer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<PathBuf>,
    /// Encoder tap (conv1..fc8) for `encoder_layer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tap: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Every layer width of the published architecture is divided by this.
    pub width_divisor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub steps: u64,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// (step, factor) pairs.
    pub lr_decay: Vec<(u64, f64)>,
    /// fixed_encoder or autoencoder.
    pub mode: String,
    pub divergence_factor: f64,
    /// Steps between montages and held-out evaluations (0 disables).
    pub montage_every: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume: Option<PathBuf>,
    /// Encoder training only: number of classes is taken from the dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_input: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_b: Option<String>,
    /// Images evaluated or perturbed: "test" (held-out split) or "all".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<String>,
    /// Input directory of images or feature files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, seed: u64, out: PathBuf) -> Self {
        RunConfig {
            command,
            seed,
            out,
            checkpoint: None,
            dataset: None,
            features: None,
            network: None,
            train: None,
            analysis: None,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Writes `run.toml` into the output directory.
    pub fn write(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let path = self.out.join(RUN_FILE);
        fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn dataset(&self) -> Result<&DatasetConfig> {
        self.dataset
            .as_ref()
            .ok_or_else(|| Error::Usage("no dataset configured".into()))
    }

    pub fn features(&self) -> Result<&FeatureConfig> {
        self.features
            .as_ref()
            .ok_or_else(|| Error::Usage("no feature extractor configured".into()))
    }

    pub fn analysis(&self) -> AnalysisConfig {
        self.analysis.clone().unwrap_or_default()
    }

    pub fn checkpoint(&self) -> Result<&Path> {
        self.checkpoint
            .as_deref()
            .ok_or_else(|| Error::Usage("no checkpoint given".into()))
    }
}
