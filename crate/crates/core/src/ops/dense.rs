use crate::error::{check_dim, Axis, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Affine map `y = W·x + b` over each flattened batch item.
///
/// `weights` has shape (out, in, 1, 1); the output has shape (N, out, 1, 1).
pub fn fully_connected<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (n, d) = (input.shape().n(), input.shape().item_len());
    let ws = weights.shape();
    let out = ws.n();
    check_dim("fully_connected", Axis::Length, ws.item_len(), d)?;
    check_dim("fully_connected", Axis::Length, out, bias.len())?;
    let mut y = Tensor::zeros(Shape::vector(n, out));
    for row in y.data_mut().chunks_mut(out) {
        row.copy_from_slice(bias.data());
    }
    T::gemm(
        n,
        d,
        out,
        input.data(),
        false,
        weights.data(),
        true,
        T::one(),
        y.data_mut(),
    );
    Ok(y)
}

pub struct DenseGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn fully_connected_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    upstream: &Tensor<T>,
    need_input_grad: bool,
) -> Result<DenseGrads<T>> {
    let (n, d) = (input.shape().n(), input.shape().item_len());
    let out = weights.shape().n();
    check_dim(
        "fully_connected_backward",
        Axis::Length,
        weights.shape().item_len(),
        d,
    )?;
    check_dim(
        "fully_connected_backward",
        Axis::Batch,
        n,
        upstream.shape().n(),
    )?;
    check_dim(
        "fully_connected_backward",
        Axis::Length,
        out,
        upstream.shape().item_len(),
    )?;
    let mut dw = Tensor::zeros(weights.shape());
    T::gemm(
        out,
        n,
        d,
        upstream.data(),
        true,
        input.data(),
        false,
        T::zero(),
        dw.data_mut(),
    );
    let mut db = Tensor::zeros(Shape::vector(1, out));
    for row in upstream.data().chunks(out) {
        for (acc, &g) in db.data_mut().iter_mut().zip(row) {
            *acc += g;
        }
    }
    let dx = if need_input_grad {
        let mut dx = Tensor::zeros(input.shape());
        T::gemm(
            n,
            out,
            d,
            upstream.data(),
            false,
            weights.data(),
            false,
            T::zero(),
            dx.data_mut(),
        );
        Some(dx)
    } else {
        None
    };
    Ok(DenseGrads {
        input: dx,
        weights: dw,
        bias: db,
    })
}
