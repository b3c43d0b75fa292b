//! ROC-AUC, seed aggregation, the results report and heatmap rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{SplitAssignment, SplitPart};
use crate::error::{Error, Result};
use crate::io;
use crate::preprocess::PreprocessVariant;
use crate::scoring::{Heatmap, ScoreMetric, ScoreTable};

/// Mann–Whitney estimate of the ROC-AUC: the fraction of (positive, negative)
/// pairs ranked correctly, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score #{i}")));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass { positives: pos as usize, negatives: neg as usize });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of positives, ranks 1-based and averaged over ties
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let twice_rank = (i + 1 + j + 1) as u64;
        let group_pos = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += twice_rank * group_pos;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - pos * (pos + 1);
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

/// AUC per metric over the images whose patient falls in `part`.
pub fn evaluate_run(table: &ScoreTable, split: &SplitAssignment, part: SplitPart) -> Result<BTreeMap<ScoreMetric, f64>> {
    let mut by_metric: BTreeMap<ScoreMetric, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for row in &table.rows {
        let p = split.part_of(&row.patient_id).ok_or_else(|| Error::MissingLabel(row.image_id.clone()))?;
        if p == part {
            let (s, l) = by_metric.entry(row.metric).or_default();
            s.push(row.score);
            l.push(row.label.is_positive());
        }
    }
    by_metric.into_iter().map(|(m, (s, l))| Ok((m, roc_auc(&s, &l)?))).collect()
}

/// Sample mean and sample (n−1) standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// One cell of the results grid: a (model, metric, variant, equalization)
/// combination summarized over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub metric: ScoreMetric,
    pub variant: PreprocessVariant,
    pub equalize: bool,
    pub aucs: Vec<f64>,
    pub mean: f64,
    /// `None` for a single seed.
    pub std: Option<f64>,
}

/// Mean and standard deviation over at least two seeds.
pub fn aggregate_seeds(model: &str, metric: ScoreMetric, variant: PreprocessVariant, equalize: bool, aucs: Vec<f64>) -> Result<EvalRow> {
    let (mean, std) = mean_std(&aucs)?;
    Ok(EvalRow { model: model.into(), metric, variant, equalize, aucs, mean, std: Some(std) })
}

impl EvalRow {
    /// Single-seed cell without a spread estimate.
    pub fn single(model: &str, metric: ScoreMetric, variant: PreprocessVariant, equalize: bool, auc: f64) -> Self {
        Self { model: model.into(), metric, variant, equalize, aucs: vec![auc], mean: auc, std: None }
    }

    fn cell(&self) -> String {
        match self.std {
            Some(s) => format!("{:.3} ± {:.3}", self.mean, s),
            None => format!("{:.3}", self.mean),
        }
    }
}

/// Column order of the results grid.
pub fn grid_columns() -> Vec<(PreprocessVariant, bool)> {
    PreprocessVariant::ALL.iter().flat_map(|&v| [(v, false), (v, true)]).collect()
}

/// Results grid: rows grouped by model then metric, six preprocessing columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<EvalRow>,
}

impl Report {
    /// (model, metric) pairs in order of first appearance.
    fn row_keys(&self) -> Vec<(String, ScoreMetric)> {
        let mut keys: Vec<(String, ScoreMetric)> = Vec::new();
        for r in &self.rows {
            let k = (r.model.clone(), r.metric);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys
    }

    fn find(&self, model: &str, metric: ScoreMetric, variant: PreprocessVariant, eq: bool) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.model == model && r.metric == metric && r.variant == variant && r.equalize == eq)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "metric", "variant", "equalize", "n_seeds", "mean", "std", "aucs"])?;
        for r in &self.rows {
            let aucs: Vec<String> = r.aucs.iter().map(|a| format!("{a:.6}")).collect();
            w.write_record([
                r.model.clone(),
                r.metric.to_string(),
                r.variant.to_string(),
                if r.equalize { "on" } else { "off" }.to_string(),
                r.aucs.len().to_string(),
                format!("{:.6}", r.mean),
                r.std.map(|s| format!("{s:.6}")).unwrap_or_default(),
                aucs.join(";"),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width text table; missing cells print as `-`.
    pub fn to_text(&self) -> String {
        let cols = grid_columns();
        let width = 15;
        let label_width = self.row_keys().iter().map(|(_, m)| m.display_name().len()).max().unwrap_or(0).max(8) + 2;
        let mut out = String::new();
        let _ = write!(out, "{:label_width$}", "");
        for v in PreprocessVariant::ALL {
            let _ = write!(out, "{:^w$}", v.to_string(), w = 2 * width);
        }
        out.push('\n');
        let _ = write!(out, "{:label_width$}", "");
        for &(_, eq) in &cols {
            let _ = write!(out, "{:>width$}", if eq { "w/ HE" } else { "w/o HE" });
        }
        out.push('\n');
        let mut current_model: Option<String> = None;
        for (model, metric) in self.row_keys() {
            if current_model.as_deref() != Some(model.as_str()) {
                out.push_str(&format!("{model}\n"));
                current_model = Some(model.clone());
            }
            let _ = write!(out, "{:label_width$}", metric.display_name());
            for &(v, eq) in &cols {
                let cell = self.find(&model, metric, v, eq).map(EvalRow::cell).unwrap_or_else(|| "-".into());
                let _ = write!(out, "{cell:>width$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, csv_path: &Path, text_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()?)?;
        std::fs::write(text_path, self.to_text())?;
        Ok(())
    }
}

/// Jet colormap on `[0,1]`: dark blue → cyan → yellow → dark red.
pub fn jet(t: f32) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let f = |c: f32| io::to_u8((1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0));
    [f(3.0), f(2.0), f(1.0)]
}

/// Heatmap divided by its own maximum (all zeros stay zero).
pub fn normalize_heatmap(h: &Heatmap) -> Array2<f32> {
    let max = h.max();
    if max > 0.0 {
        h.values.mapv(|v| v / max)
    } else {
        Array2::zeros(h.shape())
    }
}

/// Grayscale image and color-mapped heatmap side by side.
pub fn render_overlay(image: &Array2<f32>, heatmap: &Heatmap) -> Result<Array2<[u8; 3]>> {
    if image.dim() != heatmap.shape() {
        return Err(Error::ShapeMismatch { left: image.dim(), right: heatmap.shape() });
    }
    let gray = image.mapv(|v| {
        let g = io::to_u8(v);
        [g, g, g]
    });
    let colored = normalize_heatmap(heatmap).mapv(jet);
    Ok(concatenate(Axis(1), &[gray.view(), colored.view()]).expect("equal heights"))
}

pub fn write_overlay(path: &Path, image: &Array2<f32>, heatmap: &Heatmap) -> Result<()> {
    io::write_rgb_png(path, &render_overlay(image, heatmap)?)
}

/// Writes `<stem>.png` (8-bit, max-normalized) and `<stem>.npy` (raw values).
pub fn export_heatmap(dir: &Path, stem: &str, heatmap: &Heatmap) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_gray_png(&dir.join(format!("{stem}.png")), &normalize_heatmap(heatmap))?;
    io::write_npy(&dir.join(format!("{stem}.npy")), &heatmap.values)
}
