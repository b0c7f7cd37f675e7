//! Shallow feature extractors and the feature map container.

mod grid;
mod hog;
mod lbp;
mod sift;

use alloc::format;

pub use grid::{sift_grid_encode, SIFT_DESCRIPTOR_LEN};
pub use hog::{hog_extract, HOG_CELL};
pub use lbp::{lbp_bucket, lbp_extract, lbp_pattern, LBP_CELL};
pub use sift::{sift_detect_describe, Keypoint, KeypointSet, SiftOptions};

use crate::error::{check_dim, Axis, Error, Result};
use crate::tensor::{Shape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Extractor {
    Hog,
    Lbp,
    SiftGrid,
    EncoderLayer,
}

impl Extractor {
    pub fn name(self) -> &'static str {
        match self {
            Extractor::Hog => "hog",
            Extractor::Lbp => "lbp",
            Extractor::SiftGrid => "sift_grid",
            Extractor::EncoderLayer => "encoder_layer",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "hog" => Extractor::Hog,
            "lbp" => Extractor::Lbp,
            "sift_grid" | "sift" => Extractor::SiftGrid,
            "encoder_layer" => Extractor::EncoderLayer,
            other => return Err(Error::Usage(format!("unknown extractor {other:?}"))),
        })
    }
}

/// Features of one image: a (1, C, rows, cols) tensor plus its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub tensor: Tensor<f32>,
    pub extractor: Extractor,
    /// Pixels per cell side (1 for encoder layers).
    pub cell: usize,
    /// (width, height) of the image the features came from.
    pub source_size: (usize, usize),
}

impl FeatureMap {
    /// The tensor as fed to an inversion network. LBP counts are divided by
    /// the cell area so every input is of order one; the rest pass through.
    pub fn network_input(&self) -> Tensor<f32> {
        match self.extractor {
            Extractor::Lbp => {
                let s = 1.0 / (self.cell * self.cell) as f32;
                self.tensor.map(|v| v * s)
            }
            _ => self.tensor.clone(),
        }
    }
}

/// BT.601 luma of an (N, 3, H, W) image.
pub fn to_grayscale(image: &Tensor<f32>) -> Result<Tensor<f32>> {
    let s = image.shape();
    check_dim("to_grayscale", Axis::Channels, 3, s.c())?;
    Ok(Tensor::from_fn(
        Shape::new(s.n(), 1, s.h(), s.w()),
        |[n, _, y, x]| {
            let r = image.at(n, 0, y, x) as f64;
            let g = image.at(n, 1, y, x) as f64;
            let b = image.at(n, 2, y, x) as f64;
            (0.299 * r + 0.587 * g + 0.114 * b) as f32
        },
    ))
}

/// Checks a single-image, single-channel input and returns (width, height).
pub(crate) fn gray_dims(op: &'static str, gray: &Tensor<f32>) -> Result<(usize, usize)> {
    let s = gray.shape();
    check_dim(op, Axis::Batch, 1, s.n())?;
    check_dim(op, Axis::Channels, 1, s.c())?;
    Ok((s.w(), s.h()))
}

/// Requires `found >= min` along `axis`.
pub(crate) fn check_min(op: &'static str, axis: Axis, min: usize, found: usize) -> Result<()> {
    if found < min {
        return Err(Error::Dimension {
            op,
            axis,
            expected: min,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_of_primaries() {
        let white = Tensor::<f32>::full(Shape::new(1, 3, 1, 1), 1.0);
        assert!((to_grayscale(&white).unwrap().data()[0] - 1.0).abs() < 1e-6);
        let red = Tensor::<f32>::from_fn(
            Shape::new(1, 3, 1, 1),
            |[_, c, _, _]| if c == 0 { 1.0 } else { 0.0 },
        );
        assert!((to_grayscale(&red).unwrap().data()[0] - 0.299).abs() < 1e-6);
    }

    #[test]
    fn grayscale_needs_three_channels() {
        let img = Tensor::<f32>::zeros(Shape::new(1, 4, 2, 2));
        assert!(matches!(
            to_grayscale(&img),
            Err(Error::Dimension {
                axis: Axis::Channels,
                ..
            })
        ));
    }
}

/// Non-negative remainder of `x / m` for `m > 0`.
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}
