//! Autoencoder and GAN anomaly detectors: declarative architectures, layers on
//! candle, losses, training loops, checkpoints and model-based scoring.

pub mod arch;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod losses;
pub mod model;
pub mod nn;
pub mod score;
pub mod train;

pub use arch::{build_architecture, ArchConfig, ArchitectureSpec, LayerKind, LayerSpec, ModelKind, Shape, SubNetwork};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{TrainConfig, PAPER_SEEDS};
pub use error::{Error, Result};
pub use model::{LatentCode, Model};
pub use score::{score_dataset, score_image, ScoreOptions};
pub use train::{train_model, train_model_with, LossHistory, TrainOutput};
