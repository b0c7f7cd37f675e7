use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::image::{distance, resize_bilinear};
use crate::rng;
use crate::tensor::Tensor;

/// Test sets larger than this use sampled pairs for the normalizer.
pub const MAX_EXACT_PAIRS_SET: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// Mean of the per-image errors.
    pub error: f64,
    /// Average pairwise distance between test images.
    pub normalizer: f64,
    /// `‖x_i − x̂_i‖ / N` per image.
    pub per_image: Vec<f64>,
}

/// Average Euclidean distance between test images: all unordered pairs up
/// to 512 images, otherwise `512 · n` seeded random pairs of distinct images.
pub fn pairwise_normalizer(targets: &[Tensor<f32>], seed: u64) -> Result<f64> {
    let n = targets.len();
    if n < 2 {
        return Err(Error::Metric(format!(
            "need at least 2 test images, got {n}"
        )));
    }
    let d = |i: usize, j: usize| distance(targets[i].data(), targets[j].data());
    let mean = if n <= MAX_EXACT_PAIRS_SET {
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += d(i, j);
            }
        }
        sum / (n * (n - 1) / 2) as f64
    } else {
        let mut rng = rng::seeded(seed);
        let pairs = MAX_EXACT_PAIRS_SET * n;
        let mut sum = 0.0;
        for _ in 0..pairs {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            sum += d(i, j);
        }
        sum / pairs as f64
    };
    if !(mean > 0.0) {
        return Err(Error::Metric(
            "test images are identical; normalizer is zero".into(),
        ));
    }
    Ok(mean)
}

/// Normalized reconstruction error of `predictions` (values in [0, 1]) against
/// `targets`. Predictions of a different size are bilinearly resized first.
pub fn normalized_error(
    predictions: &[Tensor<f32>],
    targets: &[Tensor<f32>],
    seed: u64,
) -> Result<ErrorReport> {
    if predictions.len() != targets.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let normalizer = pairwise_normalizer(targets, seed)?;
    let mut per_image = Vec::with_capacity(targets.len());
    for (p, t) in predictions.iter().zip(targets) {
        let (ps, ts) = (p.shape(), t.shape());
        let p = if (ps.h(), ps.w()) != (ts.h(), ts.w()) {
            resize_bilinear(p, ts.h(), ts.w())?
        } else {
            p.clone()
        };
        if p.shape() != ts {
            return Err(Error::Metric(format!(
                "prediction {} does not match target {ts}",
                p.shape()
            )));
        }
        per_image.push(distance(p.data(), t.data()) / normalizer);
    }
    let error = per_image.iter().sum::<f64>() / per_image.len() as f64;
    Ok(ErrorReport {
        error,
        normalizer,
        per_image,
    })
}

/// Pixel-wise mean of a set of images.
pub fn mean_image(images: &[Tensor<f32>]) -> Result<Tensor<f32>> {
    let first = images
        .first()
        .ok_or_else(|| Error::Metric("mean of an empty image set".into()))?;
    let mut acc = alloc::vec![0.0f64; first.len()];
    for img in images {
        if img.shape() != first.shape() {
            return Err(Error::Metric(format!(
                "image {} differs from {}",
                img.shape(),
                first.shape()
            )));
        }
        for (a, v) in acc.iter_mut().zip(img.data()) {
            *a += *v as f64;
        }
    }
    let n = images.len() as f64;
    Tensor::from_vec(
        first.shape(),
        acc.into_iter().map(|a| (a / n) as f32).collect(),
    )
}
