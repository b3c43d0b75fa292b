//! Pure image kernels on `[0,1]` single-channel arrays.

mod components;
mod geometry;
mod histogram;
mod intensity;
mod morphology;

pub use components::{binarize, component_mask, connected_components, largest_component, Component};
pub use geometry::{
    aspect_shape, boundary_center_points, boundary_corner_points, center_offset, convex_hull, crop_center, crop_rotated, crop_rotated_mask,
    flip_horizontal, flip_vertical, min_area_rect, pad_center, pad_center_mask, resize_bilinear, resize_keep_aspect,
    resize_nearest, sample_bilinear, sample_nearest, sin_cos_deg, warp_bilinear, warp_nearest, Point, RectFit,
    RotatedRect, SamplingGrid,
};
pub use histogram::{otsu_three_class, otsu_threshold, quantize, Histogram, OtsuThreshold};
pub use intensity::{histogram_equalize, masked_range, min_max_normalize};
pub use morphology::{close, dilate, erode, fill_holes};
