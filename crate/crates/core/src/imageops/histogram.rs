use std::cmp::Ordering;

use ndarray::Array2;

use crate::mask::Mask;

/// 8-bit intensity level of a `[0,1]` value.
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: [u64; 256],
}

impl Default for Histogram {
    fn default() -> Self {
        Self { bins: [0; 256] }
    }
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        Self { bins }
    }

    /// Counts quantized intensities, restricted to `mask` when given.
    pub fn from_pixels(pixels: &Array2<f32>, mask: Option<&Mask>) -> Self {
        let mut bins = [0u64; 256];
        match mask {
            Some(m) => {
                for (&v, &b) in pixels.iter().zip(m.bits().iter()) {
                    if b {
                        bins[quantize(v) as usize] += 1;
                    }
                }
            }
            None => {
                for &v in pixels.iter() {
                    bins[quantize(v) as usize] += 1;
                }
            }
        }
        Self { bins }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn occupied_bins(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtsuThreshold {
    /// Pixels at or below this level form the dark class.
    pub level: u8,
    /// Set when the histogram has fewer than two occupied bins.
    pub degenerate: bool,
}

impl OtsuThreshold {
    /// Threshold on the `[0,1]` scale halfway between `level` and the next level,
    /// so that `v > t` agrees with `quantize(v) > level`.
    pub fn as_unit(&self) -> f32 {
        (self.level as f32 + 0.5) / 255.0
    }
}

/// Otsu's threshold: the level maximising between-class variance, lowest level on ties.
///
/// Between-class variance at `t` is proportional to `(s0·N − S·n0)² / (n0·n1)`,
/// where `n0`/`s0` are the count and intensity sum up to `t` and `N`/`S` the totals.
/// Candidates are compared as exact rationals over integers.
pub fn otsu_threshold(hist: &Histogram) -> OtsuThreshold {
    let total: u128 = hist.bins.iter().map(|&c| c as u128).sum();
    let sum: u128 = hist.bins.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
    let mut n0: u128 = 0;
    let mut s0: u128 = 0;
    let mut best: Option<(u8, u128, u128)> = None;
    for (t, &count) in hist.bins.iter().enumerate().take(255) {
        n0 += count as u128;
        s0 += t as u128 * count as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (s0 * total).abs_diff(sum * n0);
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_fractions(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    match best {
        Some((level, num, _)) if num > 0 => OtsuThreshold { level, degenerate: false },
        _ => {
            let level = hist.bins.iter().position(|&c| c > 0).unwrap_or(0) as u8;
            OtsuThreshold { level, degenerate: true }
        }
    }
}

/// Three-class Otsu: levels `(t1, t2)`, `t1 < t2`, splitting the histogram into
/// `[0, t1]`, `(t1, t2]` and `(t2, 255]` with maximal between-class variance
/// (first pair in lexicographic order on ties). `None` with fewer than three
/// occupied bins.
pub fn otsu_three_class(hist: &Histogram) -> Option<(u8, u8)> {
    if hist.occupied_bins() < 3 {
        return None;
    }
    let mut n = [0.0f64; 257];
    let mut s = [0.0f64; 257];
    for (i, &c) in hist.bins.iter().enumerate() {
        n[i + 1] = n[i] + c as f64;
        s[i + 1] = s[i] + i as f64 * c as f64;
    }
    // score of levels [a, b)
    let class = |a: usize, b: usize| {
        let cnt = n[b] - n[a];
        (cnt > 0.0).then(|| (s[b] - s[a]).powi(2) / cnt)
    };
    let mut best: Option<(f64, u8, u8)> = None;
    for t1 in 0..254usize {
        let Some(c0) = class(0, t1 + 1) else { continue };
        for t2 in t1 + 1..255usize {
            let (Some(c1), Some(c2)) = (class(t1 + 1, t2 + 1), class(t2 + 1, 256)) else { continue };
            let score = c0 + c1 + c2;
            if best.is_none_or(|(b, _, _)| score > b) {
                best = Some((score, t1 as u8, t2 as u8));
            }
        }
    }
    best.map(|(_, a, b)| (a, b))
}

/// Exact comparison of `a/b` with `c/d` (`b`, `d` > 0) via continued fractions,
/// so nothing overflows.
fn cmp_fractions(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> Ordering {
    loop {
        let (qa, ra) = (a / b, a % b);
        let (qc, rc) = (c / d, c % d);
        let ord = qa.cmp(&qc);
        if ord != Ordering::Equal {
            return ord;
        }
        match (ra == 0, rc == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            // ra/b vs rc/d  <=>  d/rc vs b/ra
            (false, false) => (a, b, c, d) = (d, rc, b, ra),
        }
    }
}
