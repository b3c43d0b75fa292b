//! Pixel-level heatmaps, their aggregation into image scores, and the score table.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::mask::Mask;

/// Number of hottest pixels averaged by the top-k scores at 512×512.
pub const TOPK_AT_512: usize = 200;

/// Top-k operating point scaled with the pixel count of a `side`×`side` input.
pub fn default_topk(side: usize) -> usize {
    let scaled = TOPK_AT_512 as f64 * (side as f64 / 512.0).powi(2);
    (scaled.round() as usize).max(1)
}

/// Non-negative per-pixel error, exactly zero outside its mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub values: Array2<f32>,
}

impl Heatmap {
    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Location of the largest value (first in raster order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = ((0, 0), f32::NEG_INFINITY);
        for (idx, &v) in self.values.indexed_iter() {
            if v > best.1 {
                best = (idx, v);
            }
        }
        best.0
    }

    pub fn max(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    /// Mask of the `fraction` hottest pixels (at least one).
    pub fn hottest(&self, fraction: f64) -> Mask {
        let n = self.values.len();
        let keep = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        let mut order: Vec<(usize, f32)> = self.values.iter().copied().enumerate().collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let w = self.values.ncols();
        let mut bits = Array2::from_elem(self.shape(), false);
        for &(i, _) in &order[..keep] {
            bits[[i / w, i % w]] = true;
        }
        Mask::new(bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Squared,
    Absolute,
}

/// `(x − x̂)²` or `|x − x̂|` inside the mask, zero elsewhere.
pub fn pixel_heatmap(x: &Array2<f32>, x_hat: &Array2<f32>, mask: &Mask, kind: ErrorKind) -> Result<Heatmap> {
    if x.dim() != x_hat.dim() {
        return Err(Error::ShapeMismatch { left: x.dim(), right: x_hat.dim() });
    }
    mask.check_shape(x.dim())?;
    let values = Zip::from(x).and(x_hat).and(mask.bits()).map_collect(|&a, &b, &m| {
        if !m {
            return 0.0;
        }
        let d = a - b;
        match kind {
            ErrorKind::Squared => d * d,
            ErrorKind::Absolute => d.abs(),
        }
    });
    Ok(Heatmap { values })
}

fn masked_sorted_desc(h: &Heatmap, mask: &Mask) -> Result<Vec<f32>> {
    mask.check_shape(h.shape())?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut v: Vec<f32> = Zip::from(&h.values).and(mask.bits()).fold(Vec::new(), |mut acc, &x, &m| {
        if m {
            acc.push(x);
        }
        acc
    });
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

fn mean_of_prefix(sorted: &[f32], k: usize) -> f64 {
    let k = k.min(sorted.len());
    sorted[..k].iter().fold(0.0f64, |s, &x| s + x as f64) / k as f64
}

/// Mean over masked locations.
pub fn aggregate_mean(h: &Heatmap, mask: &Mask) -> Result<f64> {
    let v = masked_sorted_desc(h, mask)?;
    Ok(mean_of_prefix(&v, v.len()))
}

/// Mean of the `min(k, masked count)` largest masked values.
pub fn aggregate_topk(h: &Heatmap, mask: &Mask, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidTopK);
    }
    let v = masked_sorted_desc(h, mask)?;
    Ok(mean_of_prefix(&v, k))
}

/// Standard logistic function, used to squash discriminator logits.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Anomaly score from a discriminator logit: probability of being fake.
pub fn fake_probability(logit: f64) -> f64 {
    logistic(-logit)
}

/// α-GAN combined score: plain mean of code-discriminator and discriminator scores.
pub fn combine_code_and_disc(c: f64, d: f64) -> f64 {
    (c + d) / 2.0
}

/// KL divergence of `N(μ, σ²)` from `N(0, 1)`, summed over latent dimensions.
pub fn kld(mu: &[f64], sigma: &[f64]) -> f64 {
    mu.iter()
        .zip(sigma)
        .map(|(&m, &s)| {
            let v = s * s;
            0.5 * (m * m + v - 1.0 - v.ln())
        })
        .sum()
}

/// Image-level anomaly score definitions. Higher always means more anomalous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ScoreMetric {
    Mse,
    MseTopK(usize),
    L1,
    L1TopK(usize),
    Kld,
    L1PlusKld,
    MsePlusKld,
    DiscriminatorProb,
    CodeDiscriminatorProb,
    CPlusD,
}

impl ScoreMetric {
    pub fn validate(self) -> Result<Self> {
        match self {
            ScoreMetric::MseTopK(0) | ScoreMetric::L1TopK(0) => Err(Error::InvalidTopK),
            m => Ok(m),
        }
    }

    pub fn error_kind(self) -> Option<ErrorKind> {
        match self {
            ScoreMetric::Mse | ScoreMetric::MseTopK(_) | ScoreMetric::MsePlusKld => Some(ErrorKind::Squared),
            ScoreMetric::L1 | ScoreMetric::L1TopK(_) | ScoreMetric::L1PlusKld => Some(ErrorKind::Absolute),
            _ => None,
        }
    }

    pub fn topk(self) -> Option<usize> {
        match self {
            ScoreMetric::MseTopK(k) | ScoreMetric::L1TopK(k) => Some(k),
            _ => None,
        }
    }

    pub fn uses_kld(self) -> bool {
        matches!(self, ScoreMetric::Kld | ScoreMetric::L1PlusKld | ScoreMetric::MsePlusKld)
    }

    pub fn uses_discriminator(self) -> bool {
        matches!(self, ScoreMetric::DiscriminatorProb | ScoreMetric::CodeDiscriminatorProb | ScoreMetric::CPlusD)
    }

    /// Row label in the results table.
    pub fn display_name(self) -> String {
        match self {
            ScoreMetric::Mse => "MSE".into(),
            ScoreMetric::MseTopK(k) => format!("MSE (top-{k})"),
            ScoreMetric::L1 => "L1".into(),
            ScoreMetric::L1TopK(k) => format!("L1 (top-{k})"),
            ScoreMetric::Kld => "KLD".into(),
            ScoreMetric::L1PlusKld => "L1 + KLD".into(),
            ScoreMetric::MsePlusKld => "MSE + KLD".into(),
            ScoreMetric::DiscriminatorProb => "Disc. (D)".into(),
            ScoreMetric::CodeDiscriminatorProb => "Code-Disc. (C)".into(),
            ScoreMetric::CPlusD => "C + D".into(),
        }
    }
}

impl fmt::Display for ScoreMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreMetric::Mse => f.write_str("mse"),
            ScoreMetric::MseTopK(k) => write!(f, "mse_top{k}"),
            ScoreMetric::L1 => f.write_str("l1"),
            ScoreMetric::L1TopK(k) => write!(f, "l1_top{k}"),
            ScoreMetric::Kld => f.write_str("kld"),
            ScoreMetric::L1PlusKld => f.write_str("l1_kld"),
            ScoreMetric::MsePlusKld => f.write_str("mse_kld"),
            ScoreMetric::DiscriminatorProb => f.write_str("disc"),
            ScoreMetric::CodeDiscriminatorProb => f.write_str("code_disc"),
            ScoreMetric::CPlusD => f.write_str("c_plus_d"),
        }
    }
}

impl FromStr for ScoreMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_k = |rest: &str| rest.parse::<usize>().map_err(|e| Error::Parse(format!("bad top-k in {s:?}: {e}")));
        let m = match s {
            "mse" => ScoreMetric::Mse,
            "l1" => ScoreMetric::L1,
            "kld" => ScoreMetric::Kld,
            "l1_kld" => ScoreMetric::L1PlusKld,
            "mse_kld" => ScoreMetric::MsePlusKld,
            "disc" => ScoreMetric::DiscriminatorProb,
            "code_disc" => ScoreMetric::CodeDiscriminatorProb,
            "c_plus_d" => ScoreMetric::CPlusD,
            _ => {
                if let Some(rest) = s.strip_prefix("mse_top") {
                    ScoreMetric::MseTopK(parse_k(rest)?)
                } else if let Some(rest) = s.strip_prefix("l1_top") {
                    ScoreMetric::L1TopK(parse_k(rest)?)
                } else {
                    return Err(Error::Parse(format!("unknown metric {s:?}")));
                }
            }
        };
        m.validate()
    }
}

impl From<ScoreMetric> for String {
    fn from(m: ScoreMetric) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for ScoreMetric {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub image_id: String,
    pub patient_id: String,
    pub label: Label,
    pub metric: ScoreMetric,
    pub score: f64,
}

/// One row per (image, metric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Metrics in order of first appearance.
    pub fn metrics(&self) -> Vec<ScoreMetric> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.metric) {
                out.push(r.metric);
            }
        }
        out
    }

    pub fn rows_for(&self, metric: ScoreMetric) -> impl Iterator<Item = &ScoreRow> {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["image_id", "patient_id", "label", "metric", "score"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<ScoreRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}
