use ndarray::Array2;

use crate::imageops::{binarize, close, fill_holes, largest_component, otsu_threshold, Histogram};
use crate::mask::Mask;

pub const CLOSING_RADIUS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: Mask,
    pub level: u8,
    pub warning: Option<String>,
}

/// Foreground mask of a hand crop: Otsu, largest component, closing, hole filling.
/// Falls back to an all-ones mask when no threshold can be found.
pub fn segment_foreground(pixels: &Array2<f32>) -> Segmentation {
    let t = otsu_threshold(&Histogram::from_pixels(pixels, None));
    let fallback = |why: &str| {
        log::warn!("segmentation fell back to full mask: {why}");
        Segmentation { mask: Mask::full(pixels.dim()), level: t.level, warning: Some(why.to_string()) }
    };
    if t.degenerate {
        return fallback("uniform image");
    }
    let Ok(blob) = largest_component(&binarize(pixels, t.as_unit())) else {
        return fallback("no foreground");
    };
    let mask = fill_holes(&close(&blob, CLOSING_RADIUS));
    Segmentation { mask, level: t.level, warning: None }
}
