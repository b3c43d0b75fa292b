//! Data handling, image kernels, preprocessing, anomaly heatmaps and
//! evaluation for unsupervised anomaly detection on hand radiographs.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod imageops;
pub mod io;
pub mod mask;
pub mod preprocess;
pub mod scoring;
pub mod synthetic;

pub use dataset::{
    ingest_dataset, patient_split, to_grayscale, DatasetIndex, ImageRecord, Label, RecordMeta, SplitAssignment,
    SplitPart,
};
pub use error::{Error, Result};
pub use mask::Mask;
