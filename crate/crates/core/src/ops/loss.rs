use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};
#[allow(unused_imports)]
use num_traits::Float;

fn check_same(op: &'static str, a: Shape, b: Shape) -> Result<()> {
    check_dim(op, Axis::Batch, a.n(), b.n())?;
    check_dim(op, Axis::Channels, a.c(), b.c())?;
    check_dim(op, Axis::Height, a.h(), b.h())?;
    check_dim(op, Axis::Width, a.w(), b.w())
}

/// Sum of squared differences divided by the batch size. The sum is
/// compensated so that finite-difference checks on large outputs are not
/// dominated by accumulation error.
pub fn mse_loss<T: Scalar>(prediction: &Tensor<T>, target: &Tensor<T>) -> Result<f64> {
    check_same("mse_loss", prediction.shape(), target.shape())?;
    let batch = prediction.shape().n().max(1) as f64;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (&p, &t) in prediction.data().iter().zip(target.data()) {
        let d = p.as_f64() - t.as_f64();
        let term = d * d;
        let next = sum + term;
        comp += if sum.abs() >= term {
            (sum - next) + term
        } else {
            (term - next) + sum
        };
        sum = next;
    }
    Ok((sum + comp) / batch)
}

/// `2 (prediction - target) / batch`.
pub fn mse_loss_grad<T: Scalar>(prediction: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    check_same("mse_loss_grad", prediction.shape(), target.shape())?;
    let scale = T::of(2.0 / prediction.shape().n().max(1) as f64);
    let data = prediction
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| scale * (p - t))
        .collect();
    Tensor::from_vec(prediction.shape(), data)
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(f64, Tensor<T>)> {
    let n = logits.shape().n();
    let k = logits.shape().item_len();
    check_dim("softmax_cross_entropy", Axis::Batch, n, labels.len())?;
    let mut grad = Tensor::zeros(logits.shape());
    let mut total = 0.0;
    let mut probs = Vec::with_capacity(k);
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::Validation(format!(
                "label {label} out of range for {k} classes"
            )));
        }
        let row = logits.item_data(i);
        let max = row
            .iter()
            .map(|v| v.as_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        probs.clear();
        probs.extend(row.iter().map(|v| (v.as_f64() - max).exp()));
        let z: f64 = probs.iter().sum();
        total -= (probs[label] / z).ln();
        let g = &mut grad.data_mut()[i * k..(i + 1) * k];
        for (j, p) in probs.iter().enumerate() {
            let target = if j == label { 1.0 } else { 0.0 };
            g[j] = T::of((p / z - target) / n as f64);
        }
    }
    Ok((total / n.max(1) as f64, grad))
}
