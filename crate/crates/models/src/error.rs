use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model {0}")]
    UnknownModel(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("standard deviations must be positive")]
    NonPositiveSigma,

    #[error("training input contains positive image {0}")]
    Leakage(String),

    #[error("metric {metric} is not available for {model}")]
    IncompatibleMetric { metric: String, model: String },

    #[error("no training records")]
    NoData,

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Candle(#[from] candle_core::Error),

    #[error(transparent)]
    Core(#[from] xad_core::Error),

    #[error(transparent)]
    Safetensors(#[from] safetensors::SafeTensorError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
