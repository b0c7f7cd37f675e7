//! Uniform local binary patterns, 58 buckets per cell.

use super::{check_min, gray_dims, Extractor, FeatureMap};
use crate::error::{Axis, Result};
use crate::tensor::{Shape, Tensor};

pub const LBP_CELL: usize = 16;

/// Neighbour offsets (dy, dx) in circular order; bit `i` belongs to entry `i`.
const RING: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// 8-bit pattern at (x, y): bit set where the neighbour is strictly
/// brighter than the center. Neighbours outside the image read as 0.
pub fn lbp_pattern(img: &[f32], w: usize, h: usize, x: usize, y: usize) -> u8 {
    let center = img[y * w + x];
    let mut p = 0u8;
    for (bit, (dy, dx)) in RING.iter().enumerate() {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        let v = if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
            0.0
        } else {
            img[ny as usize * w + nx as usize]
        };
        if v > center {
            p |= 1 << bit;
        }
    }
    p
}

/// Bucket of a pattern: a circular run of `len` ones (1..=7) starting at
/// bit `start` maps to `(len - 1) * 8 + start`; all-zero and all-one
/// patterns share bucket 56; everything else is bucket 57.
pub fn lbp_bucket(p: u8) -> usize {
    if p == 0 || p == 0xff {
        return 56;
    }
    let transitions = (p ^ p.rotate_right(1)).count_ones();
    if transitions != 2 {
        return 57;
    }
    // A run starts at a set bit whose predecessor is clear.
    let start = (0..8)
        .find(|&i| p & (1 << i) != 0 && p & (1 << ((i + 7) % 8)) == 0)
        .unwrap();
    (p.count_ones() as usize - 1) * 8 + start
}

/// Per-cell pattern histograms (integer counts), shaped
/// (1, 58, ⌈H/cell⌉, ⌈W/cell⌉).
pub fn lbp_extract(gray: &Tensor<f32>, cell: usize) -> Result<FeatureMap> {
    let (w, h) = gray_dims("lbp_extract", gray)?;
    let cell = cell.max(1);
    check_min("lbp_extract", Axis::Width, cell, w)?;
    check_min("lbp_extract", Axis::Height, cell, h)?;
    let cols = w.div_ceil(cell);
    let rows = h.div_ceil(cell);
    let mut out = Tensor::zeros(Shape::new(1, 58, rows, cols));
    let img = gray.data();
    for y in 0..h {
        for x in 0..w {
            let b = lbp_bucket(lbp_pattern(img, w, h, x, y));
            *out.at_mut(0, b, y / cell, x / cell) += 1.0;
        }
    }
    Ok(FeatureMap {
        tensor: out,
        extractor: Extractor::Lbp,
        cell,
        source_size: (w, h),
    })
}
