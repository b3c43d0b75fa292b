//! Checkpoints are safetensors files. Besides the named tensors, the header
//! metadata carries `format`, `kind`, `seed`, `config` (JSON `TrainConfig`)
//! and `arch` (JSON `ArchitectureSpec`).

use std::collections::HashMap;
use std::path::Path;

use candle_core::safetensors::Load;
use safetensors::SafeTensors;

use crate::arch::ArchitectureSpec;
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::model::Model;

pub const FORMAT: &str = "xad-checkpoint-1";

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let meta = HashMap::from([
        ("format".to_string(), FORMAT.to_string()),
        ("kind".to_string(), model.kind().slug().to_string()),
        ("seed".to_string(), model.config.seed.to_string()),
        ("config".to_string(), serde_json::to_string(&model.config)?),
        ("arch".to_string(), serde_json::to_string(&model.arch)?),
    ]);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    safetensors::serialize_to_file(model.store().named_tensors(), Some(meta), path)?;
    Ok(())
}

fn metadata(bytes: &[u8]) -> Result<HashMap<String, String>> {
    let (_, meta) = SafeTensors::read_metadata(bytes)?;
    let map = meta.metadata().clone().ok_or_else(|| Error::Checkpoint("no metadata".into()))?;
    match map.get("format") {
        Some(f) if f == FORMAT => Ok(map),
        other => Err(Error::Checkpoint(format!("unsupported format {other:?}"))),
    }
}

fn field<'a>(map: &'a HashMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key).map(String::as_str).ok_or_else(|| Error::Checkpoint(format!("missing {key}")))
}

/// Training configuration stored in a checkpoint, without loading tensors.
pub fn read_config(path: &Path) -> Result<TrainConfig> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_str(field(&metadata(&bytes)?, "config")?)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path)?;
    let meta = metadata(&bytes)?;
    let config: TrainConfig = serde_json::from_str(field(&meta, "config")?)?;
    let arch: ArchitectureSpec = serde_json::from_str(field(&meta, "arch")?)?;
    let model = Model::new(&config)?;
    if model.arch != arch {
        return Err(Error::Checkpoint("stored architecture differs from the one its config builds".into()));
    }
    let st = SafeTensors::deserialize(&bytes)?;
    let tensors = st
        .tensors()
        .into_iter()
        .map(|(name, view)| Ok((name, view.load(model.device())?)))
        .collect::<Result<HashMap<_, _>>>()?;
    model.store().load(&tensors)?;
    Ok(model)
}
