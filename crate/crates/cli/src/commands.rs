//! One function per subcommand. Each reads its inputs from the output root,
//! writes its artifacts there and returns a small summary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use xad_core::eval::{aggregate_seeds, evaluate_run, export_heatmap, grid_columns, write_overlay, EvalRow, Report};
use xad_core::preprocess::{
    offline_process, online_pipeline, stream_rng, HeuristicHandDetector, OfflineRecord, OnlineOptions, PreprocessedRecord, Step,
};
use xad_core::scoring::{ErrorKind, ScoreMetric, ScoreTable};
use xad_core::{ingest_dataset, patient_split, SplitAssignment, SplitPart};
use xad_models::score::reconstruction_heatmap;
use xad_models::{load_checkpoint, save_checkpoint, score_dataset, train_model_with, Model, ScoreOptions};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::layout::{column_tag, Layout};
use crate::manifest::{self, Manifest, ManifestEntry};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessSummary {
    /// Input images processed by this invocation.
    pub processed: usize,
    /// Input images already present in the manifest.
    pub skipped: usize,
    /// Manifest entries after the run; split hands count twice.
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSummary {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub seed: u64,
    pub checkpoint: PathBuf,
    pub first_loss: f64,
    pub last_loss: f64,
}

pub fn layout(cfg: &RunConfig) -> Layout {
    Layout::new(&cfg.output_root)
}

pub fn preprocess(cfg: &RunConfig, force: bool) -> Result<PreprocessSummary> {
    cfg.validate_with_data()?;
    let index = ingest_dataset(&cfg.data_root)?;
    for (path, why) in &index.skipped {
        log::warn!("skipped {}: {why}", path.display());
    }
    let layout = layout(cfg);
    let dir = layout.preprocessed(cfg.variant);
    std::fs::create_dir_all(dir.join("images"))?;
    std::fs::create_dir_all(dir.join("masks"))?;
    let manifest_path = layout.manifest(cfg.variant);

    let sources: BTreeSet<&str> = index.records.iter().map(|m| m.image_id.as_str()).collect();
    let mut kept: Vec<ManifestEntry> = Vec::new();
    if manifest_path.is_file() && !force {
        let old = Manifest::read(&manifest_path)?;
        if old.variant != cfg.variant {
            return Err(Error::Invalid(format!("{} belongs to variant {}", manifest_path.display(), old.variant)));
        }
        // a source counts as done only if every one of its outputs is on disk
        let mut complete: BTreeMap<String, bool> = BTreeMap::new();
        for e in &old.entries {
            let ok = dir.join(&e.image).is_file() && dir.join(&e.mask).is_file();
            *complete.entry(e.source_id.clone()).or_insert(true) &= ok;
        }
        kept = old
            .entries
            .into_iter()
            .filter(|e| sources.contains(e.source_id.as_str()) && complete[&e.source_id])
            .collect();
    }
    let done: BTreeSet<String> = kept.iter().map(|e| e.source_id.clone()).collect();
    let todo: Vec<_> = index.records.iter().filter(|m| !done.contains(&m.image_id)).collect();

    let detector = HeuristicHandDetector::default();
    let fresh: Vec<Vec<ManifestEntry>> = todo
        .par_iter()
        .map(|meta| {
            let record = meta.load()?;
            let outputs = offline_process(&record, cfg.variant, &detector)?;
            let entries = outputs.iter().map(|o| manifest::store(&dir, &meta.image_id, o)).collect::<Result<Vec<_>>>()?;
            for step in &entries[0].provenance {
                if let Step::CropCarrier { warning: Some(w), .. } | Step::Segment { warning: Some(w), .. } = step {
                    log::warn!("{}: {w}", meta.image_id);
                }
            }
            Ok(entries)
        })
        .collect::<Result<_>>()?;

    let mut m = Manifest { variant: cfg.variant, entries: kept };
    m.entries.extend(fresh.into_iter().flatten());
    m.write(&manifest_path)?;
    Ok(PreprocessSummary { processed: todo.len(), skipped: done.len(), outputs: m.entries.len() })
}

pub fn split(cfg: &RunConfig) -> Result<SplitSummary> {
    cfg.validate_with_data()?;
    let index = ingest_dataset(&cfg.data_root)?;
    let split = patient_split(&index, cfg.split_seed)?;
    let layout = layout(cfg);
    std::fs::create_dir_all(layout.root())?;
    split.write(&layout.split())?;
    Ok(SplitSummary {
        train: split.count(SplitPart::Train),
        validation: split.count(SplitPart::Validation),
        test: split.count(SplitPart::Test),
    })
}

pub fn read_split(layout: &Layout) -> Result<SplitAssignment> {
    let path = layout.split();
    if !path.is_file() {
        return Err(Error::Missing { what: "split manifest", path });
    }
    Ok(SplitAssignment::read(&path)?)
}

/// Offline records of the given split parts, in manifest order.
fn load_parts(cfg: &RunConfig, split: &SplitAssignment, parts: &[SplitPart]) -> Result<Vec<OfflineRecord>> {
    let layout = layout(cfg);
    let manifest = Manifest::read(&layout.manifest(cfg.variant))?;
    let dir = layout.preprocessed(cfg.variant);
    let chosen: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| split.part_of(&e.meta.patient_id).is_some_and(|p| parts.contains(&p)))
        .collect();
    chosen.par_iter().map(|e| manifest::load(&dir, e)).collect()
}

pub fn train(cfg: &RunConfig) -> Result<Vec<TrainSummary>> {
    cfg.validate()?;
    let layout = layout(cfg);
    let split = read_split(&layout)?;
    let records = load_parts(cfg, &split, &[SplitPart::Train])?;
    log::info!("training {} on {} images ({})", cfg.model.name(), records.len(), column_tag(cfg.variant, cfg.equalize));
    std::fs::create_dir_all(layout.run_dir(cfg.model, cfg.variant, cfg.equalize))?;

    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let config = cfg.train_config(seed);
        let result = train_model_with(&records, &config, |epoch, losses| {
            log::info!("seed {seed} epoch {}: {losses:?}", epoch + 1);
        })?;
        let checkpoint = layout.checkpoint(cfg.model, cfg.variant, cfg.equalize, seed);
        save_checkpoint(&result.model, &checkpoint)?;
        result.history.write(&layout.losses(cfg.model, cfg.variant, cfg.equalize, seed))?;
        let total = |row: &Vec<f64>| row.iter().sum::<f64>();
        out.push(TrainSummary {
            seed,
            checkpoint,
            first_loss: result.history.epochs.first().map(total).unwrap_or(f64::NAN),
            last_loss: result.history.epochs.last().map(total).unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

fn load_model(cfg: &RunConfig, seed: u64) -> Result<Model> {
    let path = layout(cfg).checkpoint(cfg.model, cfg.variant, cfg.equalize, seed);
    if !path.is_file() {
        return Err(Error::Missing { what: "checkpoint", path });
    }
    Ok(load_checkpoint(&path)?)
}

/// Deterministic evaluation-time view of the offline records.
fn eval_view(model: &Model, records: &[OfflineRecord]) -> Result<Vec<PreprocessedRecord>> {
    let r = model.resolution();
    let opts = OnlineOptions::eval((r, r), model.config.equalize);
    records
        .par_iter()
        .enumerate()
        .map(|(i, o)| Ok(online_pipeline(o, &opts, &mut stream_rng(model.config.seed, u64::MAX, i as u64))?))
        .collect()
}

/// Scores validation and test images for one seed and writes the table.
pub fn score_seed(cfg: &RunConfig, split: &SplitAssignment, seed: u64) -> Result<ScoreTable> {
    let model = load_model(cfg, seed)?;
    let records = load_parts(cfg, split, &[SplitPart::Validation, SplitPart::Test])?;
    let view = eval_view(&model, &records)?;
    let options = ScoreOptions { batch_size: cfg.score_batch, ..Default::default() };
    let table = score_dataset(&model, &view, &cfg.resolved_metrics(), options)?;
    let path = layout(cfg).scores(cfg.model, cfg.variant, cfg.equalize, seed);
    std::fs::create_dir_all(path.parent().expect("nested path"))?;
    table.write(&path)?;
    Ok(table)
}

pub fn score(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let layout = layout(cfg);
    let split = read_split(&layout)?;
    cfg.seeds
        .iter()
        .map(|&seed| {
            score_seed(cfg, &split, seed)?;
            Ok(layout.scores(cfg.model, cfg.variant, cfg.equalize, seed))
        })
        .collect()
}

/// Stored scores when they cover every requested metric, else fresh ones.
fn scores_for(cfg: &RunConfig, split: &SplitAssignment, seed: u64) -> Result<ScoreTable> {
    let path = layout(cfg).scores(cfg.model, cfg.variant, cfg.equalize, seed);
    if path.is_file() {
        let table = ScoreTable::read(&path)?;
        let have = table.metrics();
        if cfg.resolved_metrics().iter().all(|m| have.contains(m)) {
            return Ok(table);
        }
    }
    score_seed(cfg, split, seed)
}

fn column_rows(cfg: &RunConfig, split: &SplitAssignment) -> Result<Vec<EvalRow>> {
    let metrics = cfg.resolved_metrics();
    let mut aucs: BTreeMap<ScoreMetric, Vec<f64>> = BTreeMap::new();
    for &seed in &cfg.seeds {
        let per_metric = evaluate_run(&scores_for(cfg, split, seed)?, split, SplitPart::Test)?;
        for &m in &metrics {
            aucs.entry(m).or_default().push(per_metric[&m]);
        }
    }
    let model = cfg.model.name();
    metrics
        .iter()
        .map(|m| match aucs.remove(m).unwrap_or_default().as_slice() {
            [auc] => Ok(EvalRow::single(model, *m, cfg.variant, cfg.equalize, *auc)),
            many => Ok(aggregate_seeds(model, *m, cfg.variant, cfg.equalize, many.to_vec())?),
        })
        .collect()
}

/// Builds the AUC report over seeds. With `grid`, every preprocessing column
/// that has checkpoints or scores is included and the rest are skipped.
pub fn evaluate(cfg: &RunConfig, grid: bool, heatmap_ids: &[String]) -> Result<Report> {
    cfg.validate()?;
    let layout = layout(cfg);
    let split = read_split(&layout)?;
    let mut rows = Vec::new();
    if grid {
        for (variant, equalize) in grid_columns() {
            let c = cfg.at(variant, equalize);
            let seeds_ready = c.seeds.iter().all(|&s| {
                layout.checkpoint(c.model, variant, equalize, s).is_file() || layout.scores(c.model, variant, equalize, s).is_file()
            });
            if seeds_ready {
                rows.extend(column_rows(&c, &split)?);
            } else {
                log::warn!("no results for {}; column left empty", column_tag(variant, equalize));
            }
        }
        if rows.is_empty() {
            return Err(Error::Missing { what: "checkpoints or scores for any column", path: layout.root().join("models") });
        }
    } else {
        rows = column_rows(cfg, &split)?;
    }
    let report = Report { rows };
    report.write(&layout.report_csv(), &layout.report_txt())?;

    let mut ids = cfg.heatmaps.clone();
    ids.extend(heatmap_ids.iter().cloned());
    if !ids.is_empty() {
        heatmaps(cfg, &ids)?;
    }
    Ok(report)
}

/// Overlay plus raw export for each image id, using the first seed's model.
pub fn heatmaps(cfg: &RunConfig, ids: &[String]) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if !cfg.model.has_encoder() {
        return Err(Error::Invalid(format!("{} has no reconstruction to build heatmaps from", cfg.model.name())));
    }
    let layout = layout(cfg);
    let seed = cfg.seeds[0];
    let model = load_model(cfg, seed)?;
    let manifest = Manifest::read(&layout.manifest(cfg.variant))?;
    let dir = layout.preprocessed(cfg.variant);
    let out = layout.heatmaps(cfg.model, cfg.variant, cfg.equalize, seed);
    std::fs::create_dir_all(&out)?;

    let mut written = Vec::new();
    for id in ids {
        let entry = manifest.find(id).ok_or_else(|| Error::Invalid(format!("image {id:?} is not in the manifest")))?;
        let record = manifest::load(&dir, entry)?;
        let view = eval_view(&model, std::slice::from_ref(&record))?.remove(0);
        let heatmap = reconstruction_heatmap(&model, &view, ErrorKind::Squared)?;
        let overlay = out.join(format!("{id}_overlay.png"));
        write_overlay(&overlay, &view.pixels, &heatmap)?;
        export_heatmap(&out, id, &heatmap)?;
        written.push(overlay);
    }
    Ok(written)
}
