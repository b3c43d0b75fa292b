//! Point-set geometry and resampling.
//!
//! Continuous coordinates are `(x, y)` with `x` along columns and `y` along
//! rows; pixel `(row, col)` covers `[col, col+1) × [row, row+1)` and has its
//! center at `(col + 0.5, row + 0.5)`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;

pub type Point = (f64, f64);

/// Oriented rectangle. `width` is the extent along the direction `angle`
/// (degrees, `[-45, 45)`, positive turning from +x towards +y), `height` the
/// extent along the perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: Point,
    pub size: (f64, f64),
    pub angle: f64,
}

impl RotatedRect {
    pub fn axis_aligned(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { center: (x + width / 2.0, y + height / 2.0), size: (width, height), angle: 0.0 }
    }

    pub fn area(&self) -> f64 {
        self.size.0 * self.size.1
    }

    /// Unit vectors along the width and height sides.
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = sin_cos_deg(self.angle);
        ((c, s), (-s, c))
    }

    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let (hw, hh) = (self.size.0 / 2.0, self.size.1 / 2.0);
        let at = |a: f64, b: f64| (self.center.0 + a * u.0 + b * v.0, self.center.1 + a * u.1 + b * v.1);
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }

    /// Brings the angle into `[-45, 45)`, swapping sides for each quarter turn.
    pub fn canonical(mut self) -> Self {
        while self.angle >= 45.0 {
            self.angle -= 90.0;
            self.size = (self.size.1, self.size.0);
        }
        while self.angle < -45.0 {
            self.angle += 90.0;
            self.size = (self.size.1, self.size.0);
        }
        self
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let quarter = deg / 90.0;
    if quarter == quarter.round() {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectFit {
    pub rect: RotatedRect,
    /// Fewer than three non-collinear points; the rectangle has zero height.
    pub degenerate: bool,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dot(a: Point, b: Point) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

/// Convex hull in counter-clockwise order (math orientation), collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex hull.
pub fn min_area_rect(points: &[Point]) -> RectFit {
    let hull = convex_hull(points);
    let n = hull.len();
    if n < 3 {
        let rect = match n {
            0 => RotatedRect { center: (0.0, 0.0), size: (0.0, 0.0), angle: 0.0 },
            1 => RotatedRect { center: hull[0], size: (0.0, 0.0), angle: 0.0 },
            _ => {
                let d = sub(hull[1], hull[0]);
                RotatedRect {
                    center: ((hull[0].0 + hull[1].0) / 2.0, (hull[0].1 + hull[1].1) / 2.0),
                    size: (dot(d, d).sqrt(), 0.0),
                    angle: d.1.atan2(d.0).to_degrees(),
                }
                .canonical()
            }
        };
        return RectFit { rect, degenerate: true };
    }

    let at = |i: usize| hull[i % n];
    let (mut far, mut hi, mut lo) = (1usize, 1usize, 0usize);
    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..n {
        let d = sub(at(i + 1), at(i));
        let len = dot(d, d).sqrt();
        let e = (d.0 / len, d.1 / len);
        let nrm = (-e.1, e.0);
        while dot(sub(at(hi + 1), at(hi)), e) > 0.0 {
            hi += 1;
        }
        while dot(sub(at(far + 1), at(far)), nrm) > 0.0 {
            far += 1;
        }
        if i == 0 {
            lo = far;
        }
        while dot(sub(at(lo + 1), at(lo)), e) < 0.0 {
            lo += 1;
        }
        let max_e = dot(sub(at(hi), at(i)), e);
        let min_e = dot(sub(at(lo), at(i)), e);
        let height = dot(sub(at(far), at(i)), nrm);
        let width = max_e - min_e;
        let area = width * height;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let mid_e = (max_e + min_e) / 2.0;
            let origin = at(i);
            let center = (
                origin.0 + e.0 * mid_e + nrm.0 * height / 2.0,
                origin.1 + e.1 * mid_e + nrm.1 * height / 2.0,
            );
            let angle = e.1.atan2(e.0).to_degrees();
            best = Some((area, RotatedRect { center, size: (width, height), angle }.canonical()));
        }
    }
    RectFit { rect: best.expect("hull has edges").1, degenerate: false }
}

fn boundary_pixels(mask: &Mask) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (h, w) = mask.shape();
    let set = move |r: isize, c: isize| r >= 0 && c >= 0 && r < h as isize && c < w as isize && mask.get(r as usize, c as usize);
    mask.coordinates().into_iter().filter(move |&(r, c)| {
        let (ri, ci) = (r as isize, c as isize);
        !(set(ri - 1, ci) && set(ri + 1, ci) && set(ri, ci - 1) && set(ri, ci + 1))
    })
}

/// Corner points of every boundary pixel of `mask`; their hull encloses the
/// pixel squares exactly.
pub fn boundary_corner_points(mask: &Mask) -> Vec<Point> {
    boundary_pixels(mask)
        .flat_map(|(r, c)| {
            let (x, y) = (c as f64, r as f64);
            [(x, y), (x + 1.0, y), (x, y + 1.0), (x + 1.0, y + 1.0)]
        })
        .collect()
}

/// Centers of the boundary pixels of `mask`.
pub fn boundary_center_points(mask: &Mask) -> Vec<Point> {
    boundary_pixels(mask).map(|(r, c)| (c as f64 + 0.5, r as f64 + 0.5)).collect()
}

/// Inverse mapping from output pixel centers to source coordinates:
/// `src = origin + col_center * col_step + row_center * row_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    pub origin: Point,
    pub col_step: Point,
    pub row_step: Point,
    pub shape: (usize, usize),
}

impl SamplingGrid {
    fn source(&self, r: usize, c: usize) -> Point {
        let (u, v) = (c as f64 + 0.5, r as f64 + 0.5);
        (
            self.origin.0 + u * self.col_step.0 + v * self.row_step.0,
            self.origin.1 + u * self.col_step.1 + v * self.row_step.1,
        )
    }

    /// Grid covering `rect`, one output pixel per unit length.
    pub fn for_rect(rect: &RotatedRect) -> Self {
        let (u, v) = rect.axes();
        let shape = (rect.size.1.round() as usize, rect.size.0.round() as usize);
        let (hw, hh) = (shape.1 as f64 / 2.0, shape.0 as f64 / 2.0);
        let origin = (rect.center.0 - hw * u.0 - hh * v.0, rect.center.1 - hw * u.1 - hh * v.1);
        Self { origin, col_step: u, row_step: v, shape }
    }

    /// Rotation by `angle_deg` and per-axis scaling about the image center,
    /// keeping the canvas size. Forward map: `p' = c + R · S · (p − c)`.
    pub fn rotate_scale(shape: (usize, usize), angle_deg: f64, scale: (f64, f64)) -> Self {
        let (s, c) = sin_cos_deg(angle_deg);
        let center = (shape.1 as f64 / 2.0, shape.0 as f64 / 2.0);
        // inverse of R·S is S⁻¹·Rᵀ
        let m = [[c / scale.0, s / scale.0], [-s / scale.1, c / scale.1]];
        let col_step = (m[0][0], m[1][0]);
        let row_step = (m[0][1], m[1][1]);
        let origin = (center.0 - (m[0][0] * center.0 + m[0][1] * center.1), center.1 - (m[1][0] * center.0 + m[1][1] * center.1));
        Self { origin, col_step, row_step, shape }
    }

    /// Plain rescaling of the whole image to `shape` (pixel-center aligned).
    pub fn resize(from: (usize, usize), to: (usize, usize)) -> Self {
        let sx = from.1 as f64 / to.1 as f64;
        let sy = from.0 as f64 / to.0 as f64;
        Self { origin: (0.0, 0.0), col_step: (sx, 0.0), row_step: (0.0, sy), shape: to }
    }
}

/// Bilinear sample at continuous `(x, y)`; neighbors outside the image read as zero.
pub fn sample_bilinear(pixels: &Array2<f32>, x: f64, y: f64) -> f32 {
    let (h, w) = pixels.dim();
    let fx = x - 0.5;
    let fy = y - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = (fx - x0) as f32;
    let ay = (fy - y0) as f32;
    let get = |r: f64, c: f64| -> f32 {
        if r < 0.0 || c < 0.0 || r >= h as f64 || c >= w as f64 {
            0.0
        } else {
            pixels[[r as usize, c as usize]]
        }
    };
    let top = if ax == 0.0 { get(y0, x0) } else { get(y0, x0) * (1.0 - ax) + get(y0, x0 + 1.0) * ax };
    if ay == 0.0 {
        return top;
    }
    let bottom = if ax == 0.0 { get(y0 + 1.0, x0) } else { get(y0 + 1.0, x0) * (1.0 - ax) + get(y0 + 1.0, x0 + 1.0) * ax };
    top * (1.0 - ay) + bottom * ay
}

pub fn sample_nearest(mask: &Mask, x: f64, y: f64) -> bool {
    let (h, w) = mask.shape();
    let (r, c) = (y.floor(), x.floor());
    r >= 0.0 && c >= 0.0 && r < h as f64 && c < w as f64 && mask.get(r as usize, c as usize)
}

pub fn warp_bilinear(pixels: &Array2<f32>, grid: &SamplingGrid) -> Array2<f32> {
    Array2::from_shape_fn(grid.shape, |(r, c)| {
        let (x, y) = grid.source(r, c);
        sample_bilinear(pixels, x, y)
    })
}

pub fn warp_nearest(mask: &Mask, grid: &SamplingGrid) -> Mask {
    Mask::from_fn(grid.shape, |(r, c)| {
        let (x, y) = grid.source(r, c);
        sample_nearest(mask, x, y)
    })
}

/// Extracts the rotated region as an upright `(round(height), round(width))`
/// image by bilinear resampling; samples outside the source are zero.
pub fn crop_rotated(pixels: &Array2<f32>, rect: &RotatedRect) -> Result<Array2<f32>> {
    let grid = SamplingGrid::for_rect(rect);
    if grid.shape.0 == 0 || grid.shape.1 == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(warp_bilinear(pixels, &grid))
}

/// Mask counterpart of [`crop_rotated`], nearest-neighbor.
pub fn crop_rotated_mask(mask: &Mask, rect: &RotatedRect) -> Result<Mask> {
    let grid = SamplingGrid::for_rect(rect);
    if grid.shape.0 == 0 || grid.shape.1 == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(warp_nearest(mask, &grid))
}

/// Output shape whose longer side is `long_side`, rounding the shorter side.
pub fn aspect_shape(shape: (usize, usize), long_side: usize) -> (usize, usize) {
    let (h, w) = shape;
    let scaled = |short: usize, long: usize| ((short as f64 * long_side as f64 / long as f64).round() as usize).max(1);
    if h >= w {
        (long_side, scaled(w, h))
    } else {
        (scaled(h, w), long_side)
    }
}

/// Bilinear resize with edge clamping (no zero bleed at the borders).
pub fn resize_bilinear(pixels: &Array2<f32>, shape: (usize, usize)) -> Array2<f32> {
    let (h, w) = pixels.dim();
    if (h, w) == shape {
        return pixels.clone();
    }
    let grid = SamplingGrid::resize((h, w), shape);
    let clamp = |v: f64, hi: usize| v.clamp(0.5, hi as f64 - 0.5);
    Array2::from_shape_fn(shape, |(r, c)| {
        let (x, y) = grid.source(r, c);
        sample_bilinear(pixels, clamp(x, w), clamp(y, h))
    })
}

pub fn resize_nearest(mask: &Mask, shape: (usize, usize)) -> Mask {
    if mask.shape() == shape {
        return mask.clone();
    }
    warp_nearest(mask, &SamplingGrid::resize(mask.shape(), shape))
}

/// Resizes so the longer side equals `long_side`, keeping the aspect ratio.
pub fn resize_keep_aspect(pixels: &Array2<f32>, long_side: usize) -> Array2<f32> {
    resize_bilinear(pixels, aspect_shape(pixels.dim(), long_side))
}

/// Top-left offset `(row, col)` that centers `shape` inside `target`.
pub fn center_offset(shape: (usize, usize), target: (usize, usize)) -> Result<(usize, usize)> {
    if shape.0 > target.0 || shape.1 > target.1 {
        return Err(Error::TooLarge { input: shape, target });
    }
    Ok(((target.0 - shape.0) / 2, (target.1 - shape.1) / 2))
}

/// Zero-pads to `target` with the input centered; returns the offset used.
pub fn pad_center(pixels: &Array2<f32>, target: (usize, usize)) -> Result<(Array2<f32>, (usize, usize))> {
    let off = center_offset(pixels.dim(), target)?;
    let mut out = Array2::zeros(target);
    let (h, w) = pixels.dim();
    out.slice_mut(ndarray::s![off.0..off.0 + h, off.1..off.1 + w]).assign(pixels);
    Ok((out, off))
}

pub fn pad_center_mask(mask: &Mask, target: (usize, usize)) -> Result<(Mask, (usize, usize))> {
    let off = center_offset(mask.shape(), target)?;
    let (h, w) = mask.shape();
    let out = Mask::from_fn(target, |(r, c)| {
        r >= off.0 && c >= off.1 && r < off.0 + h && c < off.1 + w && mask.get(r - off.0, c - off.1)
    });
    Ok((out, off))
}

/// Inverse of [`pad_center`]: the centered `shape` window of `pixels`.
pub fn crop_center(pixels: &Array2<f32>, shape: (usize, usize)) -> Result<Array2<f32>> {
    let off = center_offset(shape, pixels.dim())?;
    Ok(pixels.slice(ndarray::s![off.0..off.0 + shape.0, off.1..off.1 + shape.1]).to_owned())
}

pub fn flip_horizontal<T: Clone>(a: &Array2<T>) -> Array2<T> {
    a.slice(ndarray::s![.., ..;-1]).to_owned()
}

pub fn flip_vertical<T: Clone>(a: &Array2<T>) -> Array2<T> {
    a.slice(ndarray::s![..;-1, ..]).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_box() {
        let fit = min_area_rect(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]);
        assert!(!fit.degenerate);
        assert_eq!(fit.rect.center, (1.0, 0.5));
        assert_eq!(fit.rect.size, (2.0, 1.0));
        assert_eq!(fit.rect.angle, 0.0);
    }

    #[test]
    fn tall_box_stays_upright() {
        let fit = min_area_rect(&[(0.0, 0.0), (1.0, 0.0), (1.0, 3.0), (0.0, 3.0), (0.5, 1.0)]);
        assert_eq!(fit.rect.angle, 0.0);
        assert!((fit.rect.size.0 - 1.0).abs() < 1e-12 && (fit.rect.size.1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn diamond_is_minus_45() {
        let s = 2.0f64;
        let d = s / 2f64.sqrt();
        let pts = [(0.0, d), (d, 0.0), (2.0 * d, d), (d, 2.0 * d)];
        let fit = min_area_rect(&pts);
        assert!((fit.rect.angle + 45.0).abs() < 1e-9, "{:?}", fit.rect);
        assert!((fit.rect.area() - s * s).abs() < 1e-9);
        assert!((fit.rect.size.0 - s).abs() < 1e-9 && (fit.rect.size.1 - s).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let fit = min_area_rect(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(fit.degenerate);
        assert_eq!(fit.rect.area(), 0.0);
        assert!((fit.rect.size.0.max(fit.rect.size.1) - 8f64.sqrt()).abs() < 1e-12);
        assert!(min_area_rect(&[(1.0, 1.0), (3.0, 1.0)]).degenerate);
    }

    #[test]
    fn crop_axis_aligned_is_slicing() {
        let img = Array2::from_shape_fn((8, 10), |(r, c)| (r * 10 + c) as f32 / 80.0);
        let rect = RotatedRect::axis_aligned(2.0, 3.0, 5.0, 4.0);
        let out = crop_rotated(&img, &rect).unwrap();
        assert_eq!(out, img.slice(ndarray::s![3..7, 2..7]));
    }

    #[test]
    fn crop_quarter_turn_matches_transpose_oracle() {
        // symmetric under left-right mirroring, so a quarter turn is a transpose
        let img = Array2::from_shape_fn((6, 6), |(r, c)| {
            let dc = (c as f32 - 2.5).abs();
            (r as f32 * 0.1 + dc * 0.05).min(1.0)
        });
        let rect = RotatedRect { center: (3.0, 3.0), size: (6.0, 6.0), angle: 90.0 };
        let out = crop_rotated(&img, &rect).unwrap();
        // explicit rotation oracle: out[r][c] = img[c][w-1-r]
        let rotated = Array2::from_shape_fn((6, 6), |(r, c)| img[[c, 5 - r]]);
        assert_eq!(out, rotated);
        assert_eq!(out, img.t());
    }

    #[test]
    fn crop_outside_reads_zero() {
        let img = Array2::from_elem((4, 4), 1.0f32);
        let out = crop_rotated(&img, &RotatedRect::axis_aligned(2.0, 0.0, 4.0, 2.0)).unwrap();
        assert_eq!(out.row(0).to_vec(), vec![1.0, 1.0, 0.0, 0.0]);
        assert!(crop_rotated(&img, &RotatedRect::axis_aligned(0.0, 0.0, 0.2, 3.0)).is_err());
    }

    #[test]
    fn resize_shapes() {
        assert_eq!(aspect_shape((512, 256), 128), (128, 64));
        assert_eq!(aspect_shape((128, 128), 128), (128, 128));
        assert_eq!(aspect_shape((512, 160), 128), (128, 40));
        assert_eq!(aspect_shape((160, 512), 128), (40, 128));
        let img = Array2::from_elem((20, 10), 0.5f32);
        let out = resize_keep_aspect(&img, 8);
        assert_eq!(out.dim(), (8, 4));
        assert!(out.iter().all(|&v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn pad_offsets() {
        let (out, off) = pad_center(&Array2::from_elem((128, 64), 1.0), (128, 128)).unwrap();
        assert_eq!(off, (0, 32));
        assert_eq!(out.sum(), 128.0 * 64.0);
        let same = Array2::from_shape_fn((3, 3), |(r, c)| (r + c) as f32);
        assert_eq!(pad_center(&same, (3, 3)).unwrap(), (same.clone(), (0, 0)));
        assert_eq!(center_offset((510, 400), (512, 512)).unwrap(), (1, 56));
        assert!(matches!(pad_center(&same, (2, 5)), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn rotate_scale_identity_and_quarter_turn() {
        let img = Array2::from_shape_fn((4, 4), |(r, c)| (r * 4 + c) as f32 / 16.0);
        let id = SamplingGrid::rotate_scale((4, 4), 0.0, (1.0, 1.0));
        assert_eq!(warp_bilinear(&img, &id), img);
        let quarter = warp_bilinear(&img, &SamplingGrid::rotate_scale((4, 4), 90.0, (1.0, 1.0)));
        // forward map turns +x into +y: out[r][c] = img[w-1-c][r]
        let oracle = Array2::from_shape_fn((4, 4), |(r, c)| img[[3 - c, r]]);
        assert_eq!(quarter, oracle);
    }
}
