//! Independent reference implementations used by the exactness tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;

/// Exhaustive Otsu: between-class variance `w0·w1·(μ0 − μ1)²` evaluated as an
/// exact rational at every level, first maximum wins. `None` when no level
/// separates two non-empty classes with positive variance.
pub fn otsu_exhaustive(bins: &[u64; 256]) -> Option<u8> {
    let total: u64 = bins.iter().sum();
    let n = BigRational::from_integer(BigInt::from(total));
    let mut best: Option<(BigRational, u8)> = None;
    for t in 0..255usize {
        let n0: u64 = bins[..=t].iter().sum();
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s0: u64 = bins[..=t].iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
        let s1: u64 = bins[t + 1..].iter().enumerate().map(|(i, &c)| (i + t + 1) as u64 * c).sum();
        let r = |v: u64| BigRational::from_integer(BigInt::from(v));
        let w0 = r(n0) / &n;
        let w1 = r(n1) / &n;
        let mu0 = r(s0) / r(n0);
        let mu1 = r(s1) / r(n1);
        let d = mu0 - mu1;
        let var = w0 * w1 * &d * &d;
        if best.as_ref().is_none_or(|(b, _)| var > *b) {
            best = Some((var, t as u8));
        }
    }
    best.filter(|(v, _)| *v > BigRational::from_integer(BigInt::from(0))).map(|(_, t)| t)
}

/// Smallest enclosing-rectangle area over the directions of all point pairs
/// (a superset of the hull edges).
pub fn min_rect_area_brute(points: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                continue;
            }
            let (ux, uy) = (dx / len, dy / len);
            let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let u = p.0 * ux + p.1 * uy;
                let v = -p.0 * uy + p.1 * ux;
                u0 = u0.min(u);
                u1 = u1.max(u);
                v0 = v0.min(v);
                v1 = v1.max(v);
            }
            best = best.min((u1 - u0) * (v1 - v0));
        }
    }
    best
}

/// Fraction of (positive, negative) pairs with the positive ranked higher,
/// ties counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice_wins, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

/// Sorts the masked values in descending order and averages the first `k`.
pub fn topk_by_sorting(values: &[f32], mask: &[bool], k: usize) -> f64 {
    let mut v: Vec<f32> = values.iter().zip(mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = k.min(v.len());
    let mut sum = 0.0f64;
    for &x in &v[..k] {
        sum += x as f64;
    }
    sum / k as f64
}
