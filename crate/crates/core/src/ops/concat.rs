use alloc::vec::Vec;

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Joins two tensors along the channel axis; `a` occupies the first block.
pub fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    check_dim("concat_channels", Axis::Batch, sa.n(), sb.n())?;
    check_dim("concat_channels", Axis::Height, sa.h(), sb.h())?;
    check_dim("concat_channels", Axis::Width, sa.w(), sb.w())?;
    let (la, lb) = (sa.item_len(), sb.item_len());
    let mut data = Vec::with_capacity(a.len() + b.len());
    for n in 0..sa.n() {
        data.extend_from_slice(&a.data()[n * la..(n + 1) * la]);
        data.extend_from_slice(&b.data()[n * lb..(n + 1) * lb]);
    }
    Tensor::from_vec(Shape::new(sa.n(), sa.c() + sb.c(), sa.h(), sa.w()), data)
}

/// Splits channels `[0, first)` and `[first, C)`; the adjoint of
/// [`concat_channels`].
pub fn split_channels<T: Scalar>(t: &Tensor<T>, first: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let s = t.shape();
    if first > s.c() {
        return Err(Error::Dimension {
            op: "split_channels",
            axis: Axis::Channels,
            expected: first,
            found: s.c(),
        });
    }
    let plane = s.h() * s.w();
    let (la, lb) = (first * plane, (s.c() - first) * plane);
    let mut a = Vec::with_capacity(s.n() * la);
    let mut b = Vec::with_capacity(s.n() * lb);
    for n in 0..s.n() {
        let item = t.item_data(n);
        a.extend_from_slice(&item[..la]);
        b.extend_from_slice(&item[la..]);
    }
    Ok((
        Tensor::from_vec(Shape::new(s.n(), first, s.h(), s.w()), a)?,
        Tensor::from_vec(Shape::new(s.n(), s.c() - first, s.h(), s.w()), b)?,
    ))
}
