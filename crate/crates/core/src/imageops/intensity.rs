use ndarray::Array2;

use super::histogram::{quantize, Histogram};
use crate::mask::Mask;

/// Histogram equalization: every pixel maps to the fraction of (masked) pixels
/// at or below its quantized level. Monotone, so intensity order is preserved.
pub fn histogram_equalize(pixels: &Array2<f32>, mask: Option<&Mask>) -> Array2<f32> {
    let hist = Histogram::from_pixels(pixels, mask);
    let total = hist.total();
    if total == 0 {
        return pixels.clone();
    }
    let mut lut = [0f32; 256];
    let mut acc = 0u64;
    for (level, &count) in hist.bins.iter().enumerate() {
        acc += count;
        lut[level] = (acc as f64 / total as f64) as f32;
    }
    pixels.mapv(|v| lut[quantize(v) as usize])
}

/// Range of values under `mask` (or everywhere), `None` if nothing is selected.
pub fn masked_range(pixels: &Array2<f32>, mask: Option<&Mask>) -> Option<(f32, f32)> {
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for (idx, &v) in pixels.indexed_iter() {
        if mask.is_none_or(|m| m.get(idx.0, idx.1)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Per-image min-max normalization with min/max taken under the mask.
/// Pixels outside the mask are mapped the same way and clipped to `[0,1]`;
/// a constant (or empty) region yields all zeros.
pub fn min_max_normalize(pixels: &Array2<f32>, mask: Option<&Mask>) -> Array2<f32> {
    match masked_range(pixels, mask) {
        Some((lo, hi)) if hi > lo => {
            let span = hi - lo;
            pixels.mapv(|v| ((v - lo) / span).clamp(0.0, 1.0))
        }
        _ => Array2::zeros(pixels.dim()),
    }
}
