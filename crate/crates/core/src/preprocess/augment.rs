use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Step;
use crate::error::{Error, Result};
use crate::imageops::{flip_horizontal, flip_vertical, warp_bilinear, warp_nearest, SamplingGrid};
use crate::mask::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    None,
    Default,
    Advanced,
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyName::None => "none",
            PolicyName::Default => "default",
            PolicyName::Advanced => "advanced",
        })
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PolicyName::None),
            "default" => Ok(PolicyName::Default),
            "advanced" => Ok(PolicyName::Advanced),
            other => Err(Error::Parse(format!("unknown augmentation policy {other:?}"))),
        }
    }
}

/// Per-transform probabilities and parameter ranges. Transforms run in the
/// order flip-h, flip-v, brightness, scale, rotation, each independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub name: PolicyName,
    pub hflip: f64,
    pub vflip: f64,
    pub brightness: f64,
    pub brightness_range: (f64, f64),
    pub scale: f64,
    pub scale_range: (f64, f64),
    pub rotate: f64,
    pub rotate_range: (f64, f64),
}

impl AugmentationPolicy {
    pub fn none() -> Self {
        Self {
            name: PolicyName::None,
            hflip: 0.0,
            vflip: 0.0,
            brightness: 0.0,
            brightness_range: (1.0, 1.0),
            scale: 0.0,
            scale_range: (1.0, 1.0),
            rotate: 0.0,
            rotate_range: (0.0, 0.0),
        }
    }

    /// Flips only (GANs and VAE).
    pub fn default_policy() -> Self {
        Self { name: PolicyName::Default, hflip: 0.5, vflip: 0.5, ..Self::none() }
    }

    /// Flips, brightness, scaling and rotation (CAE).
    pub fn advanced() -> Self {
        Self {
            name: PolicyName::Advanced,
            hflip: 0.5,
            vflip: 0.5,
            brightness: 0.5,
            brightness_range: (0.8, 1.2),
            scale: 0.5,
            scale_range: (0.8, 1.2),
            rotate: 0.5,
            rotate_range: (-20.0, 20.0),
        }
    }

    pub fn named(name: PolicyName) -> Self {
        match name {
            PolicyName::None => Self::none(),
            PolicyName::Default => Self::default_policy(),
            PolicyName::Advanced => Self::advanced(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.hflip, self.vflip, self.brightness, self.scale, self.rotate];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidPolicy("probabilities must lie in [0,1]".into()));
        }
        for (what, (lo, hi)) in [("brightness", self.brightness_range), ("scale", self.scale_range)] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::InvalidPolicy(format!("{what} range must be a positive interval")));
            }
        }
        if self.rotate_range.0 > self.rotate_range.1 {
            return Err(Error::InvalidPolicy("rotation range is reversed".into()));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        [self.hflip, self.vflip, self.brightness, self.scale, self.rotate].iter().all(|&p| p == 0.0)
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Random augmentation. Geometric transforms hit pixels (bilinear) and mask
/// (nearest) alike; brightness scales pixels only, clipped to `[0,1]`.
pub fn augment<R: Rng + ?Sized>(
    pixels: &Array2<f32>,
    mask: &Mask,
    policy: &AugmentationPolicy,
    rng: &mut R,
) -> Result<(Array2<f32>, Mask, Vec<Step>)> {
    mask.check_shape(pixels.dim())?;
    policy.validate()?;
    let mut steps = Vec::new();
    if rng.random_bool(policy.hflip) {
        steps.push(Step::FlipHorizontal);
    }
    if rng.random_bool(policy.vflip) {
        steps.push(Step::FlipVertical);
    }
    if rng.random_bool(policy.brightness) {
        steps.push(Step::Brightness { factor: draw(rng, policy.brightness_range) });
    }
    if rng.random_bool(policy.scale) {
        let x = draw(rng, policy.scale_range);
        let y = draw(rng, policy.scale_range);
        steps.push(Step::Scale { x, y });
    }
    if rng.random_bool(policy.rotate) {
        steps.push(Step::Rotate { degrees: draw(rng, policy.rotate_range) });
    }
    let mut px = pixels.clone();
    let mut m = mask.clone();
    for step in &steps {
        px = step.apply_to_pixels(&px);
        m = step.apply_to_mask(&m)?;
    }
    Ok((px, m, steps))
}

pub(super) fn brightness(pixels: &Array2<f32>, factor: f64) -> Array2<f32> {
    pixels.mapv(|v| (v * factor as f32).clamp(0.0, 1.0))
}

pub(super) fn flip_h(pixels: &Array2<f32>) -> Array2<f32> {
    flip_horizontal(pixels)
}

pub(super) fn flip_v(pixels: &Array2<f32>) -> Array2<f32> {
    flip_vertical(pixels)
}

pub(super) fn rotate_scale_pixels(pixels: &Array2<f32>, degrees: f64, scale: (f64, f64)) -> Array2<f32> {
    warp_bilinear(pixels, &SamplingGrid::rotate_scale(pixels.dim(), degrees, scale))
}

pub(super) fn rotate_scale_mask(mask: &Mask, degrees: f64, scale: (f64, f64)) -> Mask {
    warp_nearest(mask, &SamplingGrid::rotate_scale(mask.shape(), degrees, scale))
}
