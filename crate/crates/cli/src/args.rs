use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xad_core::preprocess::PreprocessVariant;
use xad_core::scoring::ScoreMetric;
use xad_models::ModelKind;

use crate::config::{RunConfig, Scale};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "xad", version, about = "Unsupervised anomaly detection on radiographs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Common {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Dataset root (`<patient>/<study>_<label>/*.png`)
    #[arg(long, global = true, value_name = "PATH")]
    pub data_root: Option<PathBuf>,

    /// Output root
    #[arg(long = "output", global = true, value_name = "PATH")]
    pub output_root: Option<PathBuf>,

    /// Training seed; repeat for several runs
    #[arg(long = "seed", global = true, value_name = "N")]
    pub seeds: Vec<u64>,

    #[arg(long, global = true, value_name = "raw|crop|full")]
    pub variant: Option<PreprocessVariant>,

    /// Histogram equalization
    #[arg(long, global = true)]
    pub equalize: Option<Toggle>,

    /// cae, vae, dcgan, bigan or alphagan
    #[arg(long, global = true, value_name = "NAME")]
    pub model: Option<ModelKind>,

    /// Anomaly score, e.g. mse or mse_top200; repeatable
    #[arg(long = "metric", global = true, value_name = "NAME")]
    pub metrics: Vec<ScoreMetric>,

    /// Worker threads
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Training preset
    #[arg(long, global = true, value_name = "desk|paper")]
    pub scale: Option<Scale>,

    /// Override the preset's epoch count
    #[arg(long, global = true, value_name = "N")]
    pub epochs: Option<usize>,

    /// More log output; repeat for debug
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the offline stages and store image and mask PNGs with a manifest
    Preprocess {
        /// Reprocess images already in the manifest
        #[arg(long)]
        force: bool,
    },
    /// Assign patients to train, validation and test
    Split,
    /// Train one model per seed on the training patients
    Train,
    /// Score validation and test images with each seed's model
    Score,
    /// ROC-AUC report over seeds
    Evaluate {
        /// All six preprocessing columns
        #[arg(long)]
        grid: bool,
        /// Also render a heatmap for this image id; repeatable
        #[arg(long = "heatmap", value_name = "ID")]
        heatmaps: Vec<String>,
    },
    /// Reconstruction-error heatmaps for the given image ids
    Heatmap {
        #[arg(required = true, value_name = "ID")]
        images: Vec<String>,
    },
}

impl Common {
    /// Config file (or defaults), then the environment, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_env();
        if let Some(p) = &self.data_root {
            cfg.data_root = p.clone();
        }
        if let Some(p) = &self.output_root {
            cfg.output_root = p.clone();
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(t) = self.equalize {
            cfg.equalize = t == Toggle::On;
        }
        if let Some(m) = self.model {
            cfg.model = m;
        }
        if !self.metrics.is_empty() {
            cfg.metrics = self.metrics.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(s) = self.scale {
            cfg.scale = s;
        }
        if self.epochs.is_some() {
            cfg.train.epochs = self.epochs;
        }
        Ok(cfg)
    }
}
