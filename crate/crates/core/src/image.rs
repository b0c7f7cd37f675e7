//! Image tensors: resampling and value-range helpers.
//!
//! Images are tensors of shape (N, 3, H, W) with values in [0, 1]. Networks
//! are trained on centered images, in [-0.5, 0.5].

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};
#[allow(unused_imports)]
use num_traits::Float;

/// Bilinear resampling with half-pixel centers and clamped borders.
pub fn resize_bilinear<T: Scalar>(
    input: &Tensor<T>,
    height: usize,
    width: usize,
) -> Result<Tensor<T>> {
    let s = input.shape();
    if height == 0 || width == 0 || s.h() == 0 || s.w() == 0 {
        return Err(Error::Validation(
            "cannot resize to or from an empty image".into(),
        ));
    }
    if (s.h(), s.w()) == (height, width) {
        return Ok(input.clone());
    }
    let axis = |out: usize, len: usize, i: usize| {
        let x = ((i as f64 + 0.5) * len as f64 / out as f64 - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = x.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, x - i0 as f64)
    };
    let out = Tensor::from_fn(Shape::new(s.n(), s.c(), height, width), |[n, c, y, x]| {
        let (y0, y1, fy) = axis(height, s.h(), y);
        let (x0, x1, fx) = axis(width, s.w(), x);
        let at = |yy, xx| input.at(n, c, yy, xx).as_f64();
        let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
        let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
        T::of(top * (1.0 - fy) + bottom * fy)
    });
    Ok(out)
}

/// Maps [0, 1] to [-0.5, 0.5].
pub fn center<T: Scalar>(image: &Tensor<T>) -> Tensor<T> {
    let half = T::of(0.5);
    image.map(|v| v - half)
}

/// Maps [-0.5, 0.5] back to [0, 1].
pub fn uncenter<T: Scalar>(image: &Tensor<T>) -> Tensor<T> {
    let half = T::of(0.5);
    image.map(|v| v + half)
}

pub fn clamp_unit<T: Scalar>(image: &Tensor<T>) -> Tensor<T> {
    image.map(|v| v.max(T::zero()).min(T::one()))
}

/// Euclidean distance between two equally shaped tensors.
pub fn distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
