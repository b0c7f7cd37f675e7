//! Feature-space experiments: perturbations, interpolation and sampling
//! from fitted feature statistics.

mod distribution;
mod perturb;

pub use distribution::{
    fit_distribution, sample_features, DistributionModel, FeatureDistribution, FitMode,
};
pub use perturb::{
    binarize, drop_least_then_binarize, dropout_random, keep_top_k, norm, zero_top_k, Perturbation,
};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// `steps` tensors from `a` to `b` at `λ = i / (steps - 1)`; the endpoints
/// are copies of the inputs.
pub fn interpolate<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    steps: usize,
) -> Result<Vec<Tensor<T>>> {
    if steps < 2 {
        return Err(Error::Usage(alloc::format!(
            "interpolation needs at least 2 steps, got {steps}"
        )));
    }
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op: "interpolate",
            message: alloc::format!("{} vs {}", a.shape(), b.shape()),
        });
    }
    Ok((0..steps)
        .map(|i| {
            if i == 0 {
                return a.clone();
            }
            if i == steps - 1 {
                return b.clone();
            }
            let l = i as f64 / (steps - 1) as f64;
            let data = a
                .data()
                .iter()
                .zip(b.data())
                .map(|(x, y)| T::of((1.0 - l) * x.as_f64() + l * y.as_f64()))
                .collect();
            Tensor::from_vec(a.shape(), data).unwrap()
        })
        .collect())
}
