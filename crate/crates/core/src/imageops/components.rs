use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mask::Mask;

/// Bit is set iff the pixel is strictly brighter than `threshold`.
pub fn binarize(pixels: &Array2<f32>, threshold: f32) -> Mask {
    Mask::new(pixels.mapv(|v| v > threshold))
}

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Raster-order first pixel `(row, col)`.
    pub first: (usize, usize),
    pub size: usize,
    /// Inclusive bounds: `(row_min, col_min, row_max, col_max)`.
    pub bounds: (usize, usize, usize, usize),
    label: u32,
}

/// Component labels (0 = background) and per-component statistics in raster order of discovery.
pub fn connected_components(mask: &Mask) -> (Array2<u32>, Vec<Component>) {
    let (h, w) = mask.shape();
    let mut labels = Array2::<u32>::zeros((h, w));
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) || labels[[r, c]] != 0 {
                continue;
            }
            let label = comps.len() as u32 + 1;
            let mut comp = Component { first: (r, c), size: 0, bounds: (r, c, r, c), label };
            labels[[r, c]] = label;
            queue.push_back((r, c));
            while let Some((y, x)) = queue.pop_front() {
                comp.size += 1;
                comp.bounds.0 = comp.bounds.0.min(y);
                comp.bounds.1 = comp.bounds.1.min(x);
                comp.bounds.2 = comp.bounds.2.max(y);
                comp.bounds.3 = comp.bounds.3.max(x);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (ny, nx) = (y as isize + dy, x as isize + dx);
                        if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                            continue;
                        }
                        let (ny, nx) = (ny as usize, nx as usize);
                        if mask.get(ny, nx) && labels[[ny, nx]] == 0 {
                            labels[[ny, nx]] = label;
                            queue.push_back((ny, nx));
                        }
                    }
                }
            }
            comps.push(comp);
        }
    }
    (labels, comps)
}

/// Mask of a single component from a labelling produced by [`connected_components`].
pub fn component_mask(labels: &Array2<u32>, comp: &Component) -> Mask {
    Mask::new(labels.mapv(|l| l == comp.label))
}

/// Keeps only the largest 8-connected component; ties go to the component
/// whose first pixel comes first in raster order.
pub fn largest_component(mask: &Mask) -> Result<Mask> {
    let (labels, comps) = connected_components(mask);
    let mut best: Option<&Component> = None;
    for c in &comps {
        if best.is_none_or(|b| c.size > b.size) {
            best = Some(c);
        }
    }
    best.map(|c| component_mask(&labels, c)).ok_or(Error::NoForeground)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> Mask {
        let h = rows.len();
        let w = rows[0].len();
        Mask::from_fn((h, w), |(r, c)| rows[r].as_bytes()[c] == b'#')
    }

    #[test]
    fn binarize_examples() {
        assert!(binarize(&Array2::from_elem((3, 3), 1.0), 0.5).bits().iter().all(|&b| b));
        assert!(binarize(&Array2::zeros((3, 3)), 0.5).is_empty());
        let checker = Array2::from_shape_fn((4, 5), |(r, c)| ((r + c) % 2) as f32);
        let m = binarize(&checker, 0.5);
        for ((r, c), &v) in checker.indexed_iter() {
            assert_eq!(m.get(r, c), v > 0.5);
        }
    }

    #[test]
    fn keeps_the_bigger_blob() {
        let m = mask_from(&[
            "##.....", //
            "##...##",
            "#....##",
            ".....##",
            ".....##",
        ]);
        let out = largest_component(&m).unwrap();
        assert_eq!(out.count(), 8);
        assert!(out.get(1, 5) && !out.get(0, 0));
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let m = mask_from(&["#..", ".#.", "..#"]);
        assert_eq!(largest_component(&m).unwrap(), m);
    }

    #[test]
    fn ties_go_to_first_in_raster_order() {
        let m = mask_from(&["#.#"]);
        let out = largest_component(&m).unwrap();
        assert!(out.get(0, 0) && !out.get(0, 2));
    }

    #[test]
    fn identity_cases_and_empty() {
        let full = Mask::full((4, 4));
        assert_eq!(largest_component(&full).unwrap(), full);
        assert!(matches!(largest_component(&Mask::empty((2, 2))), Err(Error::NoForeground)));
    }
}
