use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no images found under {0}")]
    NoImages(PathBuf),

    #[error("unsupported channel count {0}, expected 1 or 3")]
    ChannelCount(usize),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("no foreground")]
    NoForeground,

    #[error("empty mask")]
    EmptyMask,

    #[error("zero-area rectangle")]
    ZeroArea,

    #[error("input {input:?} larger than target {target:?}")]
    TooLarge { input: (usize, usize), target: (usize, usize) },

    #[error("not enough negative patients: {negative} negative vs {positive} positive")]
    NotEnoughNegatives { negative: usize, positive: usize },

    #[error("inconsistent labels within study {0}")]
    InconsistentStudy(String),

    #[error("both classes must be present (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },

    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("at least {needed} values required, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing label for image {0}")]
    MissingLabel(String),

    #[error("top-k requires k >= 1")]
    InvalidTopK,

    #[error("non-finite score for {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
