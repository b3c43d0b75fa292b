//! Offline stages (carrier cropping, hand localization, foreground
//! segmentation) run once per image and are stored; online stages
//! (equalization, augmentation, padding, normalization) run per load.
//!
//! Every stage appends a [`Step`] to the record's provenance. Replaying the
//! geometric steps on another mask aligned with the source image (for
//! example a ground-truth anomaly mask) maps it onto the processed frame.

mod augment;
mod carrier;
mod detect;
mod segment;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use augment::{augment, AugmentationPolicy, PolicyName};
pub use carrier::{crop_carrier, CarrierCrop, FILL_FRACTION};
pub use detect::{detect_hands, BoundingBox, HandDetector, HeuristicHandDetector};
pub use segment::{segment_foreground, Segmentation, CLOSING_RADIUS};

use crate::dataset::{ImageRecord, RecordMeta};
use crate::error::{Error, Result};
use crate::imageops::{
    crop_rotated_mask, histogram_equalize, masked_range, min_max_normalize, pad_center, pad_center_mask,
    resize_bilinear, resize_nearest, RotatedRect,
};
use crate::mask::Mask;

/// One applied processing stage with the parameters it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Load { channels: usize },
    CropCarrier { rect: Option<RotatedRect>, warning: Option<String> },
    HandBox { bbox: BoundingBox },
    Segment { level: u8, warning: Option<String> },
    FullMask,
    ClearBackground,
    Equalize { masked: bool },
    Resize { to: (usize, usize) },
    FlipHorizontal,
    FlipVertical,
    Brightness { factor: f64 },
    Scale { x: f64, y: f64 },
    Rotate { degrees: f64 },
    Pad { offset: (usize, usize), target: (usize, usize) },
    Normalize { min: f32, max: f32 },
}

impl Step {
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Step::CropCarrier { rect: Some(_), .. }
                | Step::HandBox { .. }
                | Step::Resize { .. }
                | Step::FlipHorizontal
                | Step::FlipVertical
                | Step::Scale { .. }
                | Step::Rotate { .. }
                | Step::Pad { .. }
        )
    }

    /// Applies augmentation steps to pixels; other steps pass through.
    fn apply_to_pixels(&self, pixels: &Array2<f32>) -> Array2<f32> {
        match *self {
            Step::FlipHorizontal => augment::flip_h(pixels),
            Step::FlipVertical => augment::flip_v(pixels),
            Step::Brightness { factor } => augment::brightness(pixels, factor),
            Step::Scale { x, y } => augment::rotate_scale_pixels(pixels, 0.0, (x, y)),
            Step::Rotate { degrees } => augment::rotate_scale_pixels(pixels, degrees, (1.0, 1.0)),
            _ => pixels.clone(),
        }
    }

    /// Applies the geometric part of this step to a mask (nearest neighbor).
    pub fn apply_to_mask(&self, mask: &Mask) -> Result<Mask> {
        Ok(match self {
            Step::CropCarrier { rect: Some(rect), .. } => crop_rotated_mask(mask, rect)?,
            Step::HandBox { bbox } => Mask::new(bbox.crop(mask.bits())),
            Step::Resize { to } => resize_nearest(mask, *to),
            Step::FlipHorizontal => Mask::new(crate::imageops::flip_horizontal(mask.bits())),
            Step::FlipVertical => Mask::new(crate::imageops::flip_vertical(mask.bits())),
            Step::Scale { x, y } => augment::rotate_scale_mask(mask, 0.0, (*x, *y)),
            Step::Rotate { degrees } => augment::rotate_scale_mask(mask, *degrees, (1.0, 1.0)),
            Step::Pad { target, .. } => pad_center_mask(mask, *target)?.0,
            _ => mask.clone(),
        })
    }
}

/// Replays every geometric step of `steps` on `mask`.
pub fn replay_geometry(steps: &[Step], mask: &Mask) -> Result<Mask> {
    steps.iter().try_fold(mask.clone(), |m, s| s.apply_to_mask(&m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessVariant {
    /// Image as loaded, full-frame mask.
    Raw,
    /// Carrier crop and hand boxes, full-frame mask.
    Crop,
    /// Crop plus foreground segmentation; background cleared.
    Full,
}

impl PreprocessVariant {
    pub const ALL: [PreprocessVariant; 3] = [PreprocessVariant::Raw, PreprocessVariant::Crop, PreprocessVariant::Full];
}

impl fmt::Display for PreprocessVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreprocessVariant::Raw => "raw",
            PreprocessVariant::Crop => "crop",
            PreprocessVariant::Full => "full",
        })
    }
}

impl FromStr for PreprocessVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(PreprocessVariant::Raw),
            "crop" => Ok(PreprocessVariant::Crop),
            "full" => Ok(PreprocessVariant::Full),
            other => Err(Error::Parse(format!("unknown preprocessing variant {other:?}"))),
        }
    }
}

/// Result of the offline stages for one hand.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineRecord {
    pub meta: RecordMeta,
    pub pixels: Array2<f32>,
    pub mask: Mask,
    pub provenance: Vec<Step>,
}

/// Offline stages for one image. Images showing two hands yield two records,
/// suffixed `_h0`/`_h1` left to right.
pub fn offline_process(record: &ImageRecord, variant: PreprocessVariant, detector: &dyn HandDetector) -> Result<Vec<OfflineRecord>> {
    let load = Step::Load { channels: record.meta.channels };
    if variant == PreprocessVariant::Raw {
        return Ok(vec![OfflineRecord {
            meta: record.meta.clone(),
            pixels: record.pixels.clone(),
            mask: Mask::full(record.pixels.dim()),
            provenance: vec![load, Step::FullMask],
        }]);
    }

    let carrier = crop_carrier(&record.pixels);
    let crop_step = Step::CropCarrier { rect: carrier.rect, warning: carrier.warning.clone() };
    let boxes = detect_hands(&carrier.pixels, detector);
    let many = boxes.len() > 1;
    boxes
        .into_iter()
        .enumerate()
        .map(|(i, bbox)| {
            let mut meta = record.meta.clone();
            if many {
                meta.image_id = format!("{}_h{i}", meta.image_id);
            }
            let hand = bbox.crop(&carrier.pixels);
            let mut provenance = vec![load.clone(), crop_step.clone(), Step::HandBox { bbox }];
            let (pixels, mask) = match variant {
                PreprocessVariant::Full => {
                    let seg = segment_foreground(&hand);
                    provenance.push(Step::Segment { level: seg.level, warning: seg.warning.clone() });
                    provenance.push(Step::ClearBackground);
                    let cleared = ndarray::Zip::from(&hand).and(seg.mask.bits()).map_collect(|&v, &b| if b { v } else { 0.0 });
                    (cleared, seg.mask)
                }
                _ => {
                    provenance.push(Step::FullMask);
                    let shape = hand.dim();
                    (hand, Mask::full(shape))
                }
            };
            Ok(OfflineRecord { meta, pixels, mask, provenance })
        })
        .collect()
}

/// Settings of the on-the-fly stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineOptions {
    pub target: (usize, usize),
    pub equalize: bool,
    /// Equalize with the cumulative distribution of masked pixels only.
    pub equalize_masked: bool,
    pub policy: AugmentationPolicy,
}

impl OnlineOptions {
    /// Evaluation-time options: no augmentation.
    pub fn eval(target: (usize, usize), equalize: bool) -> Self {
        Self { target, equalize, equalize_masked: false, policy: AugmentationPolicy::none() }
    }
}

/// Model-ready image: target resolution, aligned mask, full provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedRecord {
    pub meta: RecordMeta,
    pub pixels: Array2<f32>,
    pub mask: Mask,
    pub provenance: Vec<Step>,
}

/// Largest shape with the same aspect ratio that fits inside `target`.
fn fit_within(shape: (usize, usize), target: (usize, usize)) -> (usize, usize) {
    let s = (target.0 as f64 / shape.0 as f64).min(target.1 as f64 / shape.1 as f64);
    let h = ((shape.0 as f64 * s).round() as usize).clamp(1, target.0);
    let w = ((shape.1 as f64 * s).round() as usize).clamp(1, target.1);
    (h, w)
}

/// Optional equalization → resize (only if larger than target) → augmentation →
/// center padding → min-max normalization under the mask.
pub fn online_pipeline<R: Rng + ?Sized>(record: &OfflineRecord, options: &OnlineOptions, rng: &mut R) -> Result<PreprocessedRecord> {
    record.mask.check_shape(record.pixels.dim())?;
    let mut provenance = record.provenance.clone();
    let mut pixels = record.pixels.clone();
    let mut mask = record.mask.clone();

    if options.equalize {
        pixels = histogram_equalize(&pixels, options.equalize_masked.then_some(&mask));
        provenance.push(Step::Equalize { masked: options.equalize_masked });
    }
    let (h, w) = pixels.dim();
    if h > options.target.0 || w > options.target.1 {
        let to = fit_within((h, w), options.target);
        pixels = resize_bilinear(&pixels, to);
        mask = resize_nearest(&mask, to);
        provenance.push(Step::Resize { to });
    }
    if !options.policy.is_identity() {
        let (p, m, steps) = augment(&pixels, &mask, &options.policy, rng)?;
        pixels = p;
        mask = m;
        provenance.extend(steps);
    }
    let (padded, offset) = pad_center(&pixels, options.target)?;
    let (padded_mask, _) = pad_center_mask(&mask, options.target)?;
    provenance.push(Step::Pad { offset, target: options.target });

    let norm_mask = (!padded_mask.is_empty()).then_some(&padded_mask);
    let (min, max) = masked_range(&padded, norm_mask).unwrap_or((0.0, 0.0));
    let normalized = min_max_normalize(&padded, norm_mask);
    provenance.push(Step::Normalize { min, max });

    Ok(PreprocessedRecord { meta: record.meta.clone(), pixels: normalized, mask: padded_mask, provenance })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent random stream for one image load, derived from
/// `(seed, epoch, index)` so that loading order and worker count don't matter.
pub fn stream_rng(seed: u64, epoch: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(epoch)));
    rng.set_stream(index);
    rng
}
