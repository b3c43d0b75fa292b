//! Where each command reads and writes under the output root.
//!
//! ```text
//! preprocessed/<variant>/{images,masks}/<image_id>.png, manifest.json
//! split.csv
//! models/<model>/<variant>_<he|nohe>/seed<N>.safetensors, seed<N>_loss.csv
//! scores/<model>/<variant>_<he|nohe>/seed<N>.csv
//! heatmaps/<model>_<variant>_<he|nohe>_seed<N>/<image_id>{,_overlay}.png
//! report.csv, report.txt
//! ```

use std::path::{Path, PathBuf};

use xad_core::preprocess::PreprocessVariant;
use xad_models::ModelKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    root: PathBuf,
}

/// `full_he`, `raw_nohe`, ...
pub fn column_tag(variant: PreprocessVariant, equalize: bool) -> String {
    format!("{variant}_{}", if equalize { "he" } else { "nohe" })
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn preprocessed(&self, variant: PreprocessVariant) -> PathBuf {
        self.root.join("preprocessed").join(variant.to_string())
    }

    pub fn manifest(&self, variant: PreprocessVariant) -> PathBuf {
        self.preprocessed(variant).join("manifest.json")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("split.csv")
    }

    pub fn run_dir(&self, model: ModelKind, variant: PreprocessVariant, equalize: bool) -> PathBuf {
        self.root.join("models").join(model.slug()).join(column_tag(variant, equalize))
    }

    pub fn checkpoint(&self, model: ModelKind, variant: PreprocessVariant, equalize: bool, seed: u64) -> PathBuf {
        self.run_dir(model, variant, equalize).join(format!("seed{seed}.safetensors"))
    }

    pub fn losses(&self, model: ModelKind, variant: PreprocessVariant, equalize: bool, seed: u64) -> PathBuf {
        self.run_dir(model, variant, equalize).join(format!("seed{seed}_loss.csv"))
    }

    pub fn scores(&self, model: ModelKind, variant: PreprocessVariant, equalize: bool, seed: u64) -> PathBuf {
        self.root.join("scores").join(model.slug()).join(column_tag(variant, equalize)).join(format!("seed{seed}.csv"))
    }

    pub fn heatmaps(&self, model: ModelKind, variant: PreprocessVariant, equalize: bool, seed: u64) -> PathBuf {
        self.root.join("heatmaps").join(format!("{}_{}_seed{seed}", model.slug(), column_tag(variant, equalize)))
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn report_txt(&self) -> PathBuf {
        self.root.join("report.txt")
    }
}
