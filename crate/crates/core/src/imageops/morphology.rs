use std::collections::VecDeque;

use crate::mask::Mask;

fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dy * dy + dx * dx <= r * r {
                out.push((dy, dx));
            }
        }
    }
    out
}

/// Binary dilation with a disk; outside the frame counts as background.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    let offsets = disk_offsets(radius);
    let (h, w) = mask.shape();
    Mask::from_fn((h, w), |(r, c)| {
        offsets.iter().any(|&(dy, dx)| {
            let (y, x) = (r as isize + dy, c as isize + dx);
            y >= 0 && x >= 0 && y < h as isize && x < w as isize && mask.get(y as usize, x as usize)
        })
    })
}

/// Binary erosion with a disk; outside the frame counts as background.
pub fn erode(mask: &Mask, radius: usize) -> Mask {
    let offsets = disk_offsets(radius);
    let (h, w) = mask.shape();
    Mask::from_fn((h, w), |(r, c)| {
        offsets.iter().all(|&(dy, dx)| {
            let (y, x) = (r as isize + dy, c as isize + dx);
            y >= 0 && x >= 0 && y < h as isize && x < w as isize && mask.get(y as usize, x as usize)
        })
    })
}

/// Morphological closing. The mask is first extended by edge replication so
/// that foreground touching the frame edge is not eaten by the erosion.
pub fn close(mask: &Mask, radius: usize) -> Mask {
    let (h, w) = mask.shape();
    if h == 0 || w == 0 {
        return mask.clone();
    }
    let p = 2 * radius;
    let padded = Mask::from_fn((h + 2 * p, w + 2 * p), |(r, c)| {
        mask.get(r.saturating_sub(p).min(h - 1), c.saturating_sub(p).min(w - 1))
    });
    let closed = erode(&dilate(&padded, radius), radius);
    Mask::from_fn((h, w), |(r, c)| closed.get(r + p, c + p))
}

/// Sets every background pixel not 4-connected to the frame border.
pub fn fill_holes(mask: &Mask) -> Mask {
    let (h, w) = mask.shape();
    let mut outside = vec![false; h * w];
    let mut queue = VecDeque::new();
    let seed = |r: usize, c: usize, q: &mut VecDeque<(usize, usize)>, seen: &mut Vec<bool>| {
        if !mask.get(r, c) && !seen[r * w + c] {
            seen[r * w + c] = true;
            q.push_back((r, c));
        }
    };
    for c in 0..w {
        seed(0, c, &mut queue, &mut outside);
        seed(h - 1, c, &mut queue, &mut outside);
    }
    for r in 0..h {
        seed(r, 0, &mut queue, &mut outside);
        seed(r, w - 1, &mut queue, &mut outside);
    }
    while let Some((r, c)) = queue.pop_front() {
        if r > 0 {
            seed(r - 1, c, &mut queue, &mut outside);
        }
        if r + 1 < h {
            seed(r + 1, c, &mut queue, &mut outside);
        }
        if c > 0 {
            seed(r, c - 1, &mut queue, &mut outside);
        }
        if c + 1 < w {
            seed(r, c + 1, &mut queue, &mut outside);
        }
    }
    Mask::from_fn((h, w), |(r, c)| !outside[r * w + c])
}
