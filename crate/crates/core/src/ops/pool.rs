use alloc::vec::Vec;

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Output of [`max_pool2d`]: the pooled tensor and, for every output value,
/// the flat input index it was taken from.
#[derive(Clone, Debug)]
pub struct Pooled<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

/// Windowed maximum without padding. Ties resolve to the first occurrence in
/// row-major window order, which is also where the gradient is routed.
pub fn max_pool2d<T: Scalar>(input: &Tensor<T>, window: usize, stride: usize) -> Result<Pooled<T>> {
    let s = input.shape();
    if window == 0 || stride == 0 {
        return Err(Error::Shape {
            op: "max_pool2d",
            message: "window and stride must be positive".into(),
        });
    }
    if window > s.h() {
        return Err(Error::Dimension {
            op: "max_pool2d",
            axis: Axis::Height,
            expected: window,
            found: s.h(),
        });
    }
    if window > s.w() {
        return Err(Error::Dimension {
            op: "max_pool2d",
            axis: Axis::Width,
            expected: window,
            found: s.w(),
        });
    }
    let oh = (s.h() - window) / stride + 1;
    let ow = (s.w() - window) / stride + 1;
    let out_shape = Shape::new(s.n(), s.c(), oh, ow);
    let mut out = Tensor::zeros(out_shape);
    let mut argmax = Vec::with_capacity(out_shape.len());
    let x = input.data();
    let mut o = 0;
    for n in 0..s.n() {
        for c in 0..s.c() {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best_i = s.offset(n, c, oy * stride, ox * stride);
                    let mut best = x[best_i];
                    for ky in 0..window {
                        for kx in 0..window {
                            let i = s.offset(n, c, oy * stride + ky, ox * stride + kx);
                            if x[i] > best {
                                best = x[i];
                                best_i = i;
                            }
                        }
                    }
                    out.data_mut()[o] = best;
                    argmax.push(best_i);
                    o += 1;
                }
            }
        }
    }
    Ok(Pooled {
        output: out,
        argmax,
    })
}

pub fn max_pool2d_backward<T: Scalar>(
    input_shape: Shape,
    argmax: &[usize],
    upstream: &Tensor<T>,
) -> Result<Tensor<T>> {
    check_dim(
        "max_pool2d_backward",
        Axis::Length,
        argmax.len(),
        upstream.len(),
    )?;
    let mut dx = Tensor::zeros(input_shape);
    for (&i, &g) in argmax.iter().zip(upstream.data()) {
        dx.data_mut()[i] += g;
    }
    Ok(dx)
}
