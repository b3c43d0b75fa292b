//! Index of offline-processed images stored as 8-bit PNG pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use xad_core::io::{read_mask_png, read_png, write_gray_png, write_mask_png};
use xad_core::preprocess::{OfflineRecord, PreprocessVariant, Step};
use xad_core::{to_grayscale, RecordMeta};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Id of the input image; differs from `meta.image_id` for split hands.
    pub source_id: String,
    pub meta: RecordMeta,
    pub image: String,
    pub mask: String,
    pub provenance: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub variant: PreprocessVariant,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(variant: PreprocessVariant) -> Self {
        Self { variant, entries: Vec::new() }
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::Missing { what: "preprocessing manifest", path: path.to_path_buf() });
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Sorts entries by image id, then writes pretty JSON.
    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.entries.sort_by(|a, b| a.meta.image_id.cmp(&b.meta.image_id));
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn find(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.meta.image_id == image_id)
    }
}

/// Writes the pixel and mask PNGs of `record` into `dir/{images,masks}`.
pub fn store(dir: &Path, source_id: &str, record: &OfflineRecord) -> Result<ManifestEntry> {
    let name = format!("{}.png", record.meta.image_id);
    write_gray_png(&dir.join("images").join(&name), &record.pixels)?;
    write_mask_png(&dir.join("masks").join(&name), &record.mask)?;
    Ok(ManifestEntry {
        source_id: source_id.to_string(),
        meta: record.meta.clone(),
        image: format!("images/{name}"),
        mask: format!("masks/{name}"),
        provenance: record.provenance.clone(),
    })
}

/// Reads an entry back from `dir`.
pub fn load(dir: &Path, entry: &ManifestEntry) -> Result<OfflineRecord> {
    let pixels = to_grayscale(&read_png(&dir.join(&entry.image))?)?;
    let mask = read_mask_png(&dir.join(&entry.mask))?;
    mask.check_shape(pixels.dim())?;
    Ok(OfflineRecord { meta: entry.meta.clone(), pixels, mask, provenance: entry.provenance.clone() })
}
