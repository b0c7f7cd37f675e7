use crate::error::{check_dim, Axis, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// `x` for `x >= 0`, `slope * x` otherwise. A slope of 0 gives a plain ReLU.
pub fn leaky_relu<T: Scalar>(input: &Tensor<T>, slope: T) -> Tensor<T> {
    input.map(|x| if x >= T::zero() { x } else { slope * x })
}

/// Gradient is 1 on `x >= 0` (including exactly zero) and `slope` below.
pub fn leaky_relu_backward<T: Scalar>(
    input: &Tensor<T>,
    slope: T,
    upstream: &Tensor<T>,
) -> Result<Tensor<T>> {
    check_dim(
        "leaky_relu_backward",
        Axis::Length,
        input.len(),
        upstream.len(),
    )?;
    let mut out = upstream.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x < T::zero() {
            *g *= slope;
        }
    }
    Ok(out)
}
