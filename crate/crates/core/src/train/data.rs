use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;
#[allow(unused_imports)]
use num_traits::Float;

/// Deterministic train/test split of `n` items: a seeded shuffle, then the
/// first `round(fraction · n)` indices train. Both parts come back sorted.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction {train_fraction} outside (0, 1)"
        )));
    }
    if n < 4 {
        return Err(Error::Validation(format!(
            "need at least 4 images, found {n}"
        )));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 2);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Inputs and centered targets for decoder training, one (1, C, H, W)
/// tensor per item.
#[derive(Clone, Debug, Default)]
pub struct TrainingData {
    pub inputs: Vec<Tensor<f32>>,
    pub targets: Vec<Tensor<f32>>,
}

impl TrainingData {
    pub fn new(inputs: Vec<Tensor<f32>>, targets: Vec<Tensor<f32>>) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Validation(format!(
                "{} inputs for {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        for set in [&inputs, &targets] {
            let s0 = set[0].shape();
            if let Some(i) = set.iter().position(|t| t.shape() != s0 || s0.n() != 1) {
                return Err(Error::Validation(format!(
                    "item {i} has shape {}, expected {}",
                    set[i].shape(),
                    s0.with_batch(1)
                )));
            }
        }
        Ok(TrainingData { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor<f32>, Tensor<f32>)> {
        let x: Vec<&Tensor<f32>> = indices.iter().map(|&i| &self.inputs[i]).collect();
        let y: Vec<&Tensor<f32>> = indices.iter().map(|&i| &self.targets[i]).collect();
        Ok((Tensor::stack(&x)?, Tensor::stack(&y)?))
    }
}
