use ndarray::Array2;

use crate::imageops::{
    binarize, boundary_center_points, crop_rotated, largest_component, min_area_rect, otsu_three_class, otsu_threshold, Histogram, OtsuThreshold,
    RotatedRect,
};

/// Carrier rectangles covering more than this fraction of the frame are not cropped.
pub const FILL_FRACTION: f64 = 0.98;

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierCrop {
    pub pixels: Array2<f32>,
    /// Rectangle that was cut out; `None` when the input was returned unchanged.
    pub rect: Option<RotatedRect>,
    pub warning: Option<String>,
}

impl CarrierCrop {
    fn unchanged(pixels: &Array2<f32>, warning: Option<String>) -> Self {
        if let Some(w) = &warning {
            log::warn!("carrier crop skipped: {w}");
        }
        Self { pixels: pixels.clone(), rect: None, warning }
    }
}

/// Level separating the dark frame from carrier and hand. With three
/// intensity populations (frame, carrier, hand) this is the lower cut of a
/// three-class Otsu split; otherwise the plain Otsu threshold.
fn frame_threshold(hist: &Histogram) -> Option<OtsuThreshold> {
    let two = otsu_threshold(hist);
    if two.degenerate {
        return None;
    }
    Some(match otsu_three_class(hist) {
        Some((low, _)) => OtsuThreshold { level: low, degenerate: false },
        None => two,
    })
}

/// Boundary pixel centers lie up to a pixel inside the region's true outline
/// (half a pixel per side when edges follow the pixel grid, almost none for
/// oblique edges). Grows both sides by the same amount, at most one pixel, so
/// the rectangle's area matches the region's pixel count.
fn grow_to_area(rect: RotatedRect, area: f64) -> RotatedRect {
    let (w, h) = rect.size;
    let b = w + h;
    let d = ((-b + (b * b - 4.0 * (w * h - area)).max(0.0).sqrt()) / 2.0).clamp(0.0, 1.0);
    RotatedRect { size: (w + d, h + d), ..rect }
}

/// Finds the image carrier (largest region brighter than the frame) and cuts
/// out its minimum-area rotated bounding rectangle, upright.
pub fn crop_carrier(pixels: &Array2<f32>) -> CarrierCrop {
    let Some(threshold) = frame_threshold(&Histogram::from_pixels(pixels, None)) else {
        return CarrierCrop::unchanged(pixels, Some("uniform image, no carrier found".into()));
    };
    let Ok(blob) = largest_component(&binarize(pixels, threshold.as_unit())) else {
        return CarrierCrop::unchanged(pixels, Some("no foreground".into()));
    };
    let fit = min_area_rect(&boundary_center_points(&blob));
    if fit.degenerate {
        return CarrierCrop::unchanged(pixels, Some("carrier region is degenerate".into()));
    }
    let rect = grow_to_area(fit.rect, blob.count() as f64);
    let (h, w) = pixels.dim();
    if rect.area() > FILL_FRACTION * (h * w) as f64 {
        return CarrierCrop::unchanged(pixels, None);
    }
    match crop_rotated(pixels, &rect) {
        Ok(out) => CarrierCrop { pixels: out, rect: Some(rect), warning: None },
        Err(e) => CarrierCrop::unchanged(pixels, Some(e.to_string())),
    }
}
