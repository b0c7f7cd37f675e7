//! Sparse SIFT keypoints rasterized onto a regular grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{Extractor, FeatureMap, Keypoint};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};
#[allow(unused_imports)]
use num_traits::Float;

pub const SIFT_DESCRIPTOR_LEN: usize = 128;

/// Places each keypoint in the `d × d` cell containing it. A cell holding
/// several keypoints keeps one chosen uniformly with `rng`; cells are
/// visited in row-major order and the generator is only drawn from for
/// such cells. Channels are the descriptor followed by
/// `x mod d, y mod d, sin α, cos α, ln s`.
pub fn sift_grid_encode(
    keypoints: &[Keypoint],
    image_size: (usize, usize),
    d: usize,
    rng: &mut Rng,
) -> Result<FeatureMap> {
    let (w, h) = image_size;
    if d == 0 {
        return Err(Error::Validation("grid cell size must be positive".into()));
    }
    let cols = w.div_ceil(d);
    let rows = h.div_ceil(d);
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); rows * cols];
    for (i, kp) in keypoints.iter().enumerate() {
        let inside = kp.x >= 0.0 && kp.y >= 0.0 && kp.x < w as f64 && kp.y < h as f64;
        if !inside || !(kp.scale > 0.0) {
            return Err(Error::Validation(format!(
                "keypoint {i} (x={}, y={}, scale={}) outside a {w}x{h} image",
                kp.x, kp.y, kp.scale
            )));
        }
        let c = (kp.x / d as f64).floor() as usize;
        let r = (kp.y / d as f64).floor() as usize;
        cells[r * cols + c].push(i);
    }
    let channels = SIFT_DESCRIPTOR_LEN + 5;
    let mut out = Tensor::zeros(Shape::new(1, channels, rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let members = &cells[r * cols + c];
            let kp = match members.len() {
                0 => continue,
                1 => &keypoints[members[0]],
                n => &keypoints[members[rng.random_range(0..n)]],
            };
            for (ch, v) in kp.descriptor.iter().enumerate() {
                *out.at_mut(0, ch, r, c) = *v;
            }
            let tail = [
                super::rem_euclid(kp.x, d as f64),
                super::rem_euclid(kp.y, d as f64),
                kp.orientation.sin(),
                kp.orientation.cos(),
                kp.scale.ln(),
            ];
            for (k, v) in tail.iter().enumerate() {
                *out.at_mut(0, SIFT_DESCRIPTOR_LEN + k, r, c) = *v as f32;
            }
        }
    }
    Ok(FeatureMap {
        tensor: out,
        extractor: Extractor::SiftGrid,
        cell: d,
        source_size: image_size,
    })
}
