use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::imageops::{binarize, connected_components, otsu_threshold, Histogram};

/// Axis-aligned pixel box, `x`/`y` being the top-left column/row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub confidence: f64,
}

impl BoundingBox {
    pub fn full_frame(shape: (usize, usize)) -> Self {
        Self { x: 0, y: 0, width: shape.1, height: shape.0, confidence: 0.0 }
    }

    /// Intersection with a `(height, width)` frame; `None` if empty.
    pub fn clamped(&self, shape: (usize, usize)) -> Option<Self> {
        let x1 = (self.x + self.width).min(shape.1);
        let y1 = (self.y + self.height).min(shape.0);
        (self.x < x1 && self.y < y1).then(|| Self { width: x1 - self.x, height: y1 - self.y, ..*self })
    }

    pub fn crop<T: Clone>(&self, a: &Array2<T>) -> Array2<T> {
        a.slice(s![self.y..self.y + self.height, self.x..self.x + self.width]).to_owned()
    }
}

/// Something that proposes hand boxes for an image.
pub trait HandDetector: Send + Sync {
    fn detect(&self, pixels: &Array2<f32>) -> Vec<BoundingBox>;
}

/// Stand-in for a learned detector: the (at most two) largest Otsu components
/// that cover more than `min_area_fraction` of the frame, boxed and grown by `grow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicHandDetector {
    pub min_area_fraction: f64,
    pub grow: f64,
    pub max_hands: usize,
}

impl Default for HeuristicHandDetector {
    fn default() -> Self {
        Self { min_area_fraction: 0.05, grow: 0.05, max_hands: 2 }
    }
}

impl HandDetector for HeuristicHandDetector {
    fn detect(&self, pixels: &Array2<f32>) -> Vec<BoundingBox> {
        let (h, w) = pixels.dim();
        let t = otsu_threshold(&Histogram::from_pixels(pixels, None));
        if t.degenerate {
            return Vec::new();
        }
        let (_, mut comps) = connected_components(&binarize(pixels, t.as_unit()));
        let min_size = self.min_area_fraction * (h * w) as f64;
        comps.retain(|c| c.size as f64 > min_size);
        // stable: equal sizes keep raster order
        comps.sort_by(|a, b| b.size.cmp(&a.size));
        comps
            .iter()
            .take(self.max_hands)
            .filter_map(|c| {
                let (r0, c0, r1, c1) = c.bounds;
                let (bw, bh) = ((c1 - c0 + 1) as f64, (r1 - r0 + 1) as f64);
                let (gw, gh) = (bw * self.grow / 2.0, bh * self.grow / 2.0);
                let x0 = (c0 as f64 - gw).floor().max(0.0) as usize;
                let y0 = (r0 as f64 - gh).floor().max(0.0) as usize;
                let x1 = ((c1 + 1) as f64 + gw).ceil().min(w as f64) as usize;
                let y1 = ((r1 + 1) as f64 + gh).ceil().min(h as f64) as usize;
                let confidence = (c.size as f64 / (bw * bh)).min(1.0);
                BoundingBox { x: x0, y: y0, width: x1 - x0, height: y1 - y0, confidence }.clamped((h, w))
            })
            .collect()
    }
}

/// Runs `detector` and normalizes its output: boxes clamped to the frame, at
/// most the two most confident kept, sorted left to right. With no detections
/// the whole frame is returned as a single box of confidence 0.
pub fn detect_hands(pixels: &Array2<f32>, detector: &dyn HandDetector) -> Vec<BoundingBox> {
    let shape = pixels.dim();
    let mut boxes: Vec<BoundingBox> = detector.detect(pixels).into_iter().filter_map(|b| b.clamped(shape)).collect();
    boxes.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    boxes.truncate(2);
    boxes.sort_by_key(|b| (b.x, b.y));
    if boxes.is_empty() {
        boxes.push(BoundingBox::full_frame(shape));
    }
    boxes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(rects: &[(usize, usize, usize, usize)]) -> Array2<f32> {
        Array2::from_shape_fn((60, 80), |(r, c)| {
            if rects.iter().any(|&(y, x, h, w)| (y..y + h).contains(&r) && (x..x + w).contains(&c)) {
                0.9
            } else {
                0.1
            }
        })
    }

    #[test]
    fn two_blobs_two_boxes_left_to_right() {
        let img = blobs(&[(10, 45, 30, 20), (12, 5, 30, 20)]);
        let boxes = detect_hands(&img, &HeuristicHandDetector::default());
        assert_eq!(boxes.len(), 2);
        assert!(boxes[0].x < boxes[1].x);
        // each box contains its blob and only its blob
        assert!(boxes[0].x <= 5 && boxes[0].x + boxes[0].width >= 25 && boxes[0].x + boxes[0].width < 45);
        assert!(boxes[1].x <= 45 && boxes[1].x + boxes[1].width >= 65);
    }

    #[test]
    fn single_blob_box_is_near_component_box() {
        let img = blobs(&[(10, 20, 40, 40)]);
        let boxes = detect_hands(&img, &HeuristicHandDetector::default());
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert!(b.x <= 20 && b.y <= 10 && b.x + b.width >= 60 && b.y + b.height >= 50);
        assert!(b.width <= 43 && b.height <= 43);
        assert!((b.confidence - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_image_falls_back_to_full_frame() {
        let boxes = detect_hands(&Array2::zeros((30, 40)), &HeuristicHandDetector::default());
        assert_eq!(boxes, vec![BoundingBox::full_frame((30, 40))]);
    }

    #[test]
    fn small_specks_are_ignored() {
        let img = blobs(&[(0, 0, 3, 3)]);
        assert!(HeuristicHandDetector::default().detect(&img).is_empty());
    }
}
