//! Synthetic radiograph-like fixtures: a bright blob ("hand") on a mid-gray
//! rotated rectangle ("carrier") on a dark frame. Anomalous fixtures carry a
//! saturated square inside the blob; optional clutter puts bright marks on the
//! frame outside the carrier.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, RecordMeta};
use crate::error::Result;
use crate::imageops::{sin_cos_deg, RotatedRect};
use crate::io;
use crate::mask::Mask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub size: usize,
    pub normal: usize,
    pub anomalous: usize,
    /// Side of the inserted anomaly square.
    pub square: usize,
    pub clutter: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { size: 64, normal: 200, anomalous: 100, square: 6, clutter: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub meta: RecordMeta,
    pub pixels: Array2<f32>,
    /// Ground-truth anomaly region (anomalous fixtures only).
    pub anomaly: Option<Mask>,
    pub carrier: RotatedRect,
}

const BACKGROUND: f32 = 0.05;
const CARRIER: (f32, f32) = (0.34, 0.40);
const HAND_PEAK: (f32, f32) = (0.70, 0.85);
const ANOMALY: f32 = 1.0;
const NOISE: f64 = 0.01;

fn inside_rect(rect: &RotatedRect, x: f64, y: f64, margin: f64) -> bool {
    let (s, c) = sin_cos_deg(rect.angle);
    let (dx, dy) = (x - rect.center.0, y - rect.center.1);
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    u.abs() <= rect.size.0 / 2.0 + margin && v.abs() <= rect.size.1 / 2.0 + margin
}

/// Elliptical distance of pixel center `(x, y)` from a blob, 1 on its rim.
struct Blob {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    angle: f64,
    peak: f32,
}

impl Blob {
    fn distance(&self, x: f64, y: f64) -> f64 {
        let (s, c) = sin_cos_deg(self.angle);
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        ((u / self.b).powi(2) + (v / self.a).powi(2)).sqrt()
    }

    /// Blend weight: 1 in the interior, soft rim, 0 outside.
    fn weight(&self, x: f64, y: f64) -> f64 {
        let d = self.distance(x, y);
        let t = ((1.0 - d) / 0.15).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    }

    fn intensity(&self, x: f64, y: f64) -> f32 {
        let d = self.distance(x, y);
        self.peak * (1.0 - 0.15 * (d * d).min(1.0)) as f32
    }
}

fn one_image<R: Rng>(cfg: &SyntheticConfig, index: usize, anomalous: bool, rng: &mut R) -> SyntheticImage {
    let n = cfg.size as f64;
    let k = n / 64.0;
    let carrier = RotatedRect {
        center: (n / 2.0 + rng.random_range(-1.5..1.5) * k, n / 2.0 + rng.random_range(-1.5..1.5) * k),
        size: (rng.random_range(46.0..50.0) * k, rng.random_range(48.0..52.0) * k),
        angle: rng.random_range(-5.0..5.0),
    };
    let carrier_level = rng.random_range(CARRIER.0..CARRIER.1);
    let blob = Blob {
        cx: carrier.center.0 + rng.random_range(-4.0..4.0) * k,
        cy: carrier.center.1 + rng.random_range(-4.0..4.0) * k,
        a: rng.random_range(14.0..18.0) * k,
        b: rng.random_range(8.0..11.0) * k,
        angle: rng.random_range(-25.0..25.0),
        peak: rng.random_range(HAND_PEAK.0..HAND_PEAK.1),
    };
    let noise = Normal::new(0.0, NOISE).expect("valid sigma");
    let mut pixels = Array2::from_shape_fn((cfg.size, cfg.size), |(r, c)| {
        let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
        let base = if inside_rect(&carrier, x, y, 0.0) { carrier_level } else { BACKGROUND };
        let w = blob.weight(x, y) as f32;
        base * (1.0 - w) + blob.intensity(x, y) * w
    });
    for v in pixels.iter_mut() {
        *v = (*v + noise.sample(rng) as f32).clamp(0.0, 1.0);
    }

    let anomaly = anomalous.then(|| {
        let s = cfg.square;
        loop {
            let r0 = rng.random_range(0..cfg.size - s);
            let c0 = rng.random_range(0..cfg.size - s);
            let fits = (r0..r0 + s).all(|r| (c0..c0 + s).all(|c| blob.distance(c as f64 + 0.5, r as f64 + 0.5) < 0.7));
            if fits {
                let m = Mask::from_fn((cfg.size, cfg.size), |(r, c)| (r0..r0 + s).contains(&r) && (c0..c0 + s).contains(&c));
                for (r, c) in m.coordinates() {
                    pixels[[r, c]] = ANOMALY;
                }
                break m;
            }
        }
    });

    if cfg.clutter {
        let marks = rng.random_range(2..=4);
        let mut placed = 0;
        while placed < marks {
            let h = rng.random_range(2..=4);
            let w = rng.random_range(3..=8);
            let r0 = rng.random_range(0..cfg.size - h);
            let c0 = rng.random_range(0..cfg.size - w);
            let clear = (r0..r0 + h).all(|r| (c0..c0 + w).all(|c| !inside_rect(&carrier, c as f64 + 0.5, r as f64 + 0.5, 2.5)));
            if clear {
                let level = rng.random_range(0.9..1.0);
                for r in r0..r0 + h {
                    for c in c0..c0 + w {
                        pixels[[r, c]] = level;
                    }
                }
                placed += 1;
            }
        }
    }

    let patient = format!("patient{index:04}");
    let label = if anomalous { Label::Positive } else { Label::Negative };
    let study = format!("study1_{label}");
    let meta = RecordMeta {
        image_id: format!("{patient}_study1_image1"),
        patient_id: patient.clone(),
        study_id: format!("{patient}/study1"),
        label,
        source_path: PathBuf::from(patient).join(study).join("image1.png"),
        channels: 1,
    };
    SyntheticImage { meta, pixels, anomaly, carrier }
}

/// Normal fixtures first, then anomalous ones; one patient per image.
pub fn generate(cfg: &SyntheticConfig) -> Vec<SyntheticImage> {
    (0..cfg.normal + cfg.anomalous)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            one_image(cfg, i, i >= cfg.normal, &mut rng)
        })
        .collect()
}

/// Writes images in the dataset layout under `root` and anomaly masks under
/// `truth_dir` as `<image_id>.png`. Returns the metadata with absolute paths.
pub fn write_dataset(images: &[SyntheticImage], root: &Path, truth_dir: Option<&Path>) -> Result<Vec<RecordMeta>> {
    if let Some(dir) = truth_dir {
        std::fs::create_dir_all(dir)?;
    }
    images
        .iter()
        .map(|img| {
            let path = root.join(&img.meta.source_path);
            std::fs::create_dir_all(path.parent().expect("nested path"))?;
            io::write_gray_png(&path, &img.pixels)?;
            if let (Some(dir), Some(m)) = (truth_dir, &img.anomaly) {
                io::write_mask_png(&dir.join(format!("{}.png", img.meta.image_id)), m)?;
            }
            Ok(RecordMeta { source_path: path, ..img.meta.clone() })
        })
        .collect()
}
