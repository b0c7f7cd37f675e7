//! Felzenszwalb HOG (31 channels per cell).
//!
//! Gradients are centered differences with replicated borders. Each pixel
//! votes its gradient magnitude into 18 signed orientation bins (linear
//! interpolation between the two nearest bin centers) and into the four
//! nearest cells (bilinear, pixel centers at `(x + 0.5) / cell - 0.5`).
//! Each cell is then normalized by the energy of the four 2×2 blocks
//! containing it; cells outside the grid contribute no energy.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{check_min, gray_dims, Extractor, FeatureMap};
use crate::error::{Axis, Result};
use crate::tensor::{Shape, Tensor};
#[allow(unused_imports)]
use num_traits::Float;

pub const HOG_CELL: usize = 8;

const SIGNED: usize = 18;
const UNSIGNED: usize = 9;
const EPS: f64 = 1e-4;
const TRUNC: f64 = 0.2;
const TEXTURE_WEIGHT: f64 = 0.2357;

/// Per-cell signed orientation histograms, `rows × cols × 18`.
fn histograms(img: &[f64], w: usize, h: usize, cell: usize, rows: usize, cols: usize) -> Vec<f64> {
    let mut hist = vec![0.0; rows * cols * SIGNED];
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        img[y * w + x]
    };
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let gx = (at(xi + 1, yi) - at(xi - 1, yi)) * 0.5;
            let gy = (at(xi, yi + 1) - at(xi, yi - 1)) * 0.5;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut t = gy.atan2(gx) / (2.0 * PI) * SIGNED as f64;
            if t < 0.0 {
                t += SIGNED as f64;
            }
            let b0f = t.floor();
            let fo = t - b0f;
            let b0 = (b0f as usize) % SIGNED;
            let b1 = (b0 + 1) % SIGNED;

            let cx = (x as f64 + 0.5) / cell as f64 - 0.5;
            let cy = (y as f64 + 0.5) / cell as f64 - 0.5;
            let cx0 = cx.floor();
            let cy0 = cy.floor();
            let fx = cx - cx0;
            let fy = cy - cy0;
            for (dy, wy) in [(0isize, 1.0 - fy), (1, fy)] {
                let r = cy0 as isize + dy;
                if r < 0 || r >= rows as isize || wy == 0.0 {
                    continue;
                }
                for (dx, wx) in [(0isize, 1.0 - fx), (1, fx)] {
                    let c = cx0 as isize + dx;
                    if c < 0 || c >= cols as isize || wx == 0.0 {
                        continue;
                    }
                    let base = (r as usize * cols + c as usize) * SIGNED;
                    let v = mag * wx * wy;
                    hist[base + b0] += v * (1.0 - fo);
                    hist[base + b1] += v * fo;
                }
            }
        }
    }
    hist
}

/// HOG features of a (1, 1, H, W) grayscale image, shaped
/// (1, 31, ⌈H/cell⌉, ⌈W/cell⌉): 18 signed, 9 unsigned and 4 texture channels.
pub fn hog_extract(gray: &Tensor<f32>, cell: usize) -> Result<FeatureMap> {
    let (w, h) = gray_dims("hog_extract", gray)?;
    let cell = cell.max(1);
    check_min("hog_extract", Axis::Width, 2 * cell, w)?;
    check_min("hog_extract", Axis::Height, 2 * cell, h)?;
    let cols = w.div_ceil(cell);
    let rows = h.div_ceil(cell);
    let img: Vec<f64> = gray.data().iter().map(|&v| v as f64).collect();
    let hist = histograms(&img, w, h, cell, rows, cols);

    let energy: Vec<f64> = hist
        .chunks(SIGNED)
        .map(|hc| {
            (0..UNSIGNED)
                .map(|o| (hc[o] + hc[o + UNSIGNED]).powi(2))
                .sum()
        })
        .collect();
    let e = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            energy[r as usize * cols + c as usize]
        }
    };

    let mut out = Tensor::zeros(Shape::new(1, 31, rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let (ri, ci) = (r as isize, c as isize);
            let mut norms = [0.0; 4];
            for (q, (dy, dx)) in [(-1isize, -1isize), (-1, 1), (1, -1), (1, 1)]
                .iter()
                .enumerate()
            {
                let s = e(ri, ci) + e(ri + dy, ci) + e(ri, ci + dx) + e(ri + dy, ci + dx);
                norms[q] = 1.0 / (s + EPS).sqrt();
            }
            let hc = &hist[(r * cols + c) * SIGNED..][..SIGNED];
            let mut texture = [0.0; 4];
            for o in 0..SIGNED {
                let mut sum = 0.0;
                for q in 0..4 {
                    let v = (hc[o] * norms[q]).min(TRUNC);
                    sum += v;
                    texture[q] += v;
                }
                *out.at_mut(0, o, r, c) = (0.5 * sum) as f32;
            }
            for o in 0..UNSIGNED {
                let u = hc[o] + hc[o + UNSIGNED];
                let sum: f64 = norms.iter().map(|n| (u * n).min(TRUNC)).sum();
                *out.at_mut(0, SIGNED + o, r, c) = (0.5 * sum) as f32;
            }
            for q in 0..4 {
                *out.at_mut(0, SIGNED + UNSIGNED + q, r, c) = (TEXTURE_WEIGHT * texture[q]) as f32;
            }
        }
    }
    Ok(FeatureMap {
        tensor: out,
        extractor: Extractor::Hog,
        cell,
        source_size: (w, h),
    })
}
