use ndarray::Array2;

use crate::error::{Error, Result};

/// Binary per-pixel foreground mask, shaped like the image it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    bits: Array2<bool>,
}

impl Mask {
    pub fn new(bits: Array2<bool>) -> Self {
        Self { bits }
    }

    pub fn full(shape: (usize, usize)) -> Self {
        Self { bits: Array2::from_elem(shape, true) }
    }

    pub fn empty(shape: (usize, usize)) -> Self {
        Self { bits: Array2::from_elem(shape, false) }
    }

    pub fn from_fn(shape: (usize, usize), f: impl FnMut((usize, usize)) -> bool) -> Self {
        Self { bits: Array2::from_shape_fn(shape, f) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.bits.dim()
    }

    pub fn bits(&self) -> &Array2<bool> {
        &self.bits
    }

    pub fn into_bits(self) -> Array2<bool> {
        self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[[row, col]]
    }

    /// Number of set pixels (the L1 norm of the mask).
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn to_f32(&self) -> Array2<f32> {
        self.bits.mapv(|b| if b { 1.0 } else { 0.0 })
    }

    /// Errors unless `shape` equals the mask's shape.
    pub fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch { left: self.shape(), right: shape });
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.shape() == other.shape() && self.bits.iter().zip(other.bits.iter()).all(|(&a, &b)| !a || b)
    }

    /// Intersection over union; 1.0 when both masks are empty.
    pub fn jaccard(&self, other: &Mask) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.bits.iter().zip(other.bits.iter()) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Pixel coordinates `(row, col)` of every set bit, in raster order.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        self.bits.indexed_iter().filter(|(_, &b)| b).map(|(idx, _)| idx).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_and_jaccard() {
        let a = Mask::from_fn((4, 4), |(r, _)| r < 2);
        let b = Mask::from_fn((4, 4), |(r, _)| r < 1);
        assert_eq!(a.count(), 8);
        assert!(b.is_subset_of(&a));
        assert!(!a.is_subset_of(&b));
        assert!((a.jaccard(&b) - 0.5).abs() < 1e-12);
        assert_eq!(Mask::empty((2, 2)).jaccard(&Mask::empty((2, 2))), 1.0);
    }

    #[test]
    fn shape_check() {
        let m = Mask::full((3, 2));
        assert!(m.check_shape((3, 2)).is_ok());
        assert!(matches!(m.check_shape((2, 3)), Err(Error::ShapeMismatch { .. })));
    }
}
