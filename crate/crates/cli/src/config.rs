//! Run configuration: a TOML file, then `XAD_DATA_ROOT`, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use xad_core::preprocess::{PolicyName, PreprocessVariant};
use xad_core::scoring::{default_topk, ScoreMetric};
use xad_models::score::supports;
use xad_models::{ModelKind, TrainConfig};

use crate::error::{Error, Result};

pub const DATA_ROOT_ENV: &str = "XAD_DATA_ROOT";

/// Which preset the training configuration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Small widths and 64×64 inputs; minutes on a CPU.
    #[default]
    Desk,
    /// Full-size architectures and schedules.
    Paper,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Invalid(format!("unknown scale {other:?}"))),
        }
    }
}

/// Fields replacing the preset's values when set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub lr_disc: Option<f64>,
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_root: PathBuf,
    pub output_root: PathBuf,
    pub model: ModelKind,
    pub variant: PreprocessVariant,
    pub equalize: bool,
    /// Augmentation policy; the preset's when unset.
    pub policy: Option<PolicyName>,
    pub scale: Scale,
    /// Empty means the model's default metrics.
    pub metrics: Vec<ScoreMetric>,
    pub seeds: Vec<u64>,
    pub split_seed: u64,
    /// Worker threads; all cores when unset.
    pub workers: Option<usize>,
    pub score_batch: usize,
    /// Image ids to render heatmaps for during `evaluate`.
    pub heatmaps: Vec<String>,
    pub train: TrainOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_root: PathBuf::from("data"),
            output_root: PathBuf::from("runs"),
            model: ModelKind::Cae,
            variant: PreprocessVariant::Full,
            equalize: false,
            policy: None,
            scale: Scale::Desk,
            metrics: Vec::new(),
            seeds: vec![42],
            split_seed: 0,
            workers: None,
            score_batch: 16,
            heatmaps: Vec::new(),
            train: TrainOverrides::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing { what: "config file", path: path.to_path_buf() },
            _ => e.into(),
        })?;
        Self::from_toml(&text)
    }

    /// Replaces the data root with `XAD_DATA_ROOT` when that is set.
    pub fn apply_env(&mut self) {
        if let Some(root) = std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()) {
            self.data_root = root.into();
        }
    }

    /// The same run at another preprocessing column.
    pub fn at(&self, variant: PreprocessVariant, equalize: bool) -> Self {
        Self { variant, equalize, ..self.clone() }
    }

    pub fn resolved_metrics(&self) -> Vec<ScoreMetric> {
        if !self.metrics.is_empty() {
            return self.metrics.clone();
        }
        let k = default_topk(self.resolution());
        match self.model {
            ModelKind::Cae => vec![ScoreMetric::Mse, ScoreMetric::MseTopK(k)],
            ModelKind::Vae => vec![ScoreMetric::Mse, ScoreMetric::Kld, ScoreMetric::MsePlusKld],
            ModelKind::Dcgan => vec![ScoreMetric::DiscriminatorProb],
            ModelKind::Bigan => vec![ScoreMetric::Mse, ScoreMetric::DiscriminatorProb],
            ModelKind::AlphaGan => vec![
                ScoreMetric::Mse,
                ScoreMetric::DiscriminatorProb,
                ScoreMetric::CodeDiscriminatorProb,
                ScoreMetric::CPlusD,
            ],
        }
    }

    pub fn resolution(&self) -> usize {
        self.train.resolution.unwrap_or_else(|| self.preset().resolution())
    }

    fn preset(&self) -> TrainConfig {
        match self.scale {
            Scale::Desk => TrainConfig::desk(self.model),
            Scale::Paper => TrainConfig::paper(self.model),
        }
    }

    /// Preset for the model and scale with overrides, flags and `seed` applied.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let mut c = self.preset();
        let o = &self.train;
        if let Some(r) = o.resolution {
            c.arch.resolution = r;
        }
        c.epochs = o.epochs.unwrap_or(c.epochs);
        c.batch_size = o.batch_size.unwrap_or(c.batch_size);
        c.lr = o.lr.unwrap_or(c.lr);
        if o.lr_disc.is_some() {
            c.lr_disc = o.lr_disc;
        }
        if let Some(p) = self.policy {
            c.policy = p;
        }
        c.equalize = self.equalize;
        c.seed = seed;
        c
    }

    /// Checks that do not touch the file system.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Invalid("seed list is empty".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Invalid("workers must be at least 1".into()));
        }
        if self.score_batch == 0 {
            return Err(Error::Invalid("score_batch must be at least 1".into()));
        }
        for m in self.resolved_metrics() {
            if !supports(self.model, m) {
                return Err(Error::Invalid(format!("metric {m} is not available for {}", self.model.name())));
            }
        }
        self.train_config(self.seeds[0]).validate().map_err(|e| Error::Invalid(e.to_string()))
    }

    /// `validate` plus the data root existing.
    pub fn validate_with_data(&self) -> Result<()> {
        self.validate()?;
        if !self.data_root.is_dir() {
            return Err(Error::Missing { what: "data root", path: self.data_root.clone() });
        }
        Ok(())
    }
}
