//! 2-D convolution, zero-stuffing upsampling and up-convolution.
//!
//! Convolutions are lowered to a matrix product per batch item: the padded
//! input window of every output site is unrolled into a column (im2col) and
//! multiplied by the (out_channels × in_channels·K·K) weight matrix.

use alloc::vec;

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Zero padding added on each side of the spatial axes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    pub const fn uniform(p: usize) -> Self {
        Padding {
            top: p,
            bottom: p,
            left: p,
            right: p,
        }
    }

    /// Padding rule used by every network in this crate: odd kernels pad
    /// `(K-1)/2` per side; even kernels pad `floor((K-1)/2)` before and
    /// `ceil((K-1)/2)` after. Stride-S convolutions then produce `ceil(In/S)`
    /// outputs and up-convolutions exactly double the spatial size.
    pub const fn same(kernel: usize) -> Self {
        let lo = (kernel - 1) / 2;
        let hi = kernel / 2;
        Padding {
            top: lo,
            bottom: hi,
            left: lo,
            right: hi,
        }
    }
}

/// `floor((len + pad_lo + pad_hi - k) / stride) + 1`, or `None` when the
/// padded input is shorter than the kernel.
pub fn conv_output_len(
    len: usize,
    kernel: usize,
    stride: usize,
    lo: usize,
    hi: usize,
) -> Option<usize> {
    let padded = len + lo + hi;
    if stride == 0 || padded < kernel {
        None
    } else {
        Some((padded - kernel) / stride + 1)
    }
}

#[derive(Clone, Copy, Debug)]
struct Geometry {
    in_c: usize,
    in_h: usize,
    in_w: usize,
    k: usize,
    stride: usize,
    pad: Padding,
    out_c: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn cols(&self) -> usize {
        self.out_h * self.out_w
    }

    fn rows(&self) -> usize {
        self.in_c * self.k * self.k
    }
}

fn geometry<T: Scalar>(
    op: &'static str,
    input: Shape,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    pad: Padding,
) -> Result<Geometry> {
    let ws = weights.shape();
    let k = ws.h();
    check_dim(op, Axis::Width, k, ws.w())?;
    check_dim(op, Axis::Channels, ws.c(), input.c())?;
    check_dim(op, Axis::Length, ws.n(), bias.len())?;
    if stride == 0 {
        return Err(Error::Shape {
            op,
            message: "stride must be positive".into(),
        });
    }
    if k == 0 || pad.top >= k || pad.bottom >= k || pad.left >= k || pad.right >= k {
        return Err(Error::Shape {
            op,
            message: alloc::format!("padding {pad:?} must be smaller than kernel {k}"),
        });
    }
    let out_h =
        conv_output_len(input.h(), k, stride, pad.top, pad.bottom).ok_or(Error::Dimension {
            op,
            axis: Axis::Height,
            expected: k,
            found: input.h() + pad.top + pad.bottom,
        })?;
    let out_w =
        conv_output_len(input.w(), k, stride, pad.left, pad.right).ok_or(Error::Dimension {
            op,
            axis: Axis::Width,
            expected: k,
            found: input.w() + pad.left + pad.right,
        })?;
    Ok(Geometry {
        in_c: input.c(),
        in_h: input.h(),
        in_w: input.w(),
        k,
        stride,
        pad,
        out_c: ws.n(),
        out_h,
        out_w,
    })
}

/// Unrolls one batch item into a (in_c·K·K) × (out_h·out_w) matrix.
fn im2col<T: Scalar>(g: &Geometry, x: &[T], col: &mut [T]) {
    let cols = g.cols();
    for c in 0..g.in_c {
        let plane = &x[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let dst = &mut col[row * cols..(row + 1) * cols];
                for oy in 0..g.out_h {
                    let iy = (oy * g.stride + ky) as isize - g.pad.top as isize;
                    let line = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    if iy < 0 || iy >= g.in_h as isize {
                        line.iter_mut().for_each(|v| *v = T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * g.in_w..(iy as usize + 1) * g.in_w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - g.pad.left as isize;
                        *v = if ix < 0 || ix >= g.in_w as isize {
                            T::zero()
                        } else {
                            src[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input.
fn col2im<T: Scalar>(g: &Geometry, col: &[T], dx: &mut [T]) {
    let cols = g.cols();
    for c in 0..g.in_c {
        let plane = &mut dx[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let src = &col[row * cols..(row + 1) * cols];
                for oy in 0..g.out_h {
                    let iy = (oy * g.stride + ky) as isize - g.pad.top as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    let line = &mut plane[iy as usize * g.in_w..(iy as usize + 1) * g.in_w];
                    for ox in 0..g.out_w {
                        let ix = (ox * g.stride + kx) as isize - g.pad.left as isize;
                        if ix >= 0 && (ix as usize) < g.in_w {
                            line[ix as usize] += src[oy * g.out_w + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Cross-correlation of `input` (N, C, H, W) with `weights` (O, C, K, K)
/// plus a per-channel bias, with zero padding.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>> {
    let g = geometry("conv2d", input.shape(), weights, bias, stride, padding)?;
    let n = input.shape().n();
    let out_shape = Shape::new(n, g.out_c, g.out_h, g.out_w);
    let mut out = Tensor::zeros(out_shape);
    let mut col = vec![T::zero(); g.rows() * g.cols()];
    let cols = g.cols();
    let b = bias.data();
    for item in 0..n {
        im2col(&g, input.item_data(item), &mut col);
        let y = &mut out.data_mut()[item * g.out_c * cols..(item + 1) * g.out_c * cols];
        for (o, chunk) in y.chunks_mut(cols).enumerate() {
            chunk.iter_mut().for_each(|v| *v = b[o]);
        }
        T::gemm(
            g.out_c,
            g.rows(),
            cols,
            weights.data(),
            false,
            &col,
            false,
            T::one(),
            y,
        );
    }
    Ok(out)
}

/// Gradients of a convolution with respect to its input, weights and bias.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Backward pass of [`conv2d`]. Batch items are reduced in index order.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    stride: usize,
    padding: Padding,
    upstream: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    let zero_bias = Tensor::zeros(Shape::vector(1, weights.shape().n()));
    let g = geometry(
        "conv2d_backward",
        input.shape(),
        weights,
        &zero_bias,
        stride,
        padding,
    )?;
    let n = input.shape().n();
    let us = upstream.shape();
    check_dim("conv2d_backward", Axis::Batch, n, us.n())?;
    check_dim("conv2d_backward", Axis::Channels, g.out_c, us.c())?;
    check_dim("conv2d_backward", Axis::Height, g.out_h, us.h())?;
    check_dim("conv2d_backward", Axis::Width, g.out_w, us.w())?;

    let cols = g.cols();
    let rows = g.rows();
    let mut dw = Tensor::zeros(weights.shape());
    let mut db = Tensor::zeros(Shape::vector(1, g.out_c));
    let mut dx = need_input_grad.then(|| Tensor::zeros(input.shape()));
    let mut col = vec![T::zero(); rows * cols];
    let mut dcol = vec![T::zero(); if need_input_grad { rows * cols } else { 0 }];
    for item in 0..n {
        let dy = upstream.item_data(item);
        for (o, chunk) in dy.chunks(cols).enumerate() {
            let mut s = T::zero();
            for &v in chunk {
                s += v;
            }
            db.data_mut()[o] += s;
        }
        im2col(&g, input.item_data(item), &mut col);
        T::gemm(
            g.out_c,
            cols,
            rows,
            dy,
            false,
            &col,
            true,
            T::one(),
            dw.data_mut(),
        );
        if let Some(dx) = dx.as_mut() {
            T::gemm(
                rows,
                g.out_c,
                cols,
                weights.data(),
                true,
                dy,
                false,
                T::zero(),
                &mut dcol,
            );
            let len = g.in_c * g.in_h * g.in_w;
            col2im(&g, &dcol, &mut dx.data_mut()[item * len..(item + 1) * len]);
        }
    }
    Ok(ConvGrads {
        input: dx,
        weights: dw,
        bias: db,
    })
}

/// Doubles both spatial axes, placing each value in the top-left corner of
/// a 2×2 block whose other entries are zero.
pub fn upsample2x_zero_stuff<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let s = input.shape();
    let out_shape = Shape::new(s.n(), s.c(), 2 * s.h(), 2 * s.w());
    let mut out = Tensor::zeros(out_shape);
    let src = input.data();
    let dst = out.data_mut();
    let (ow, oh) = (2 * s.w(), 2 * s.h());
    for plane in 0..s.n() * s.c() {
        for y in 0..s.h() {
            for x in 0..s.w() {
                dst[plane * oh * ow + 2 * y * ow + 2 * x] = src[(plane * s.h() + y) * s.w() + x];
            }
        }
    }
    out
}

/// Adjoint of [`upsample2x_zero_stuff`]: keeps the even (row, col) sites.
pub fn upsample2x_zero_stuff_backward<T: Scalar>(upstream: &Tensor<T>) -> Result<Tensor<T>> {
    let s = upstream.shape();
    if s.h() % 2 != 0 || s.w() % 2 != 0 {
        return Err(Error::Shape {
            op: "upsample2x_backward",
            message: alloc::format!("spatial size {}x{} is not even", s.h(), s.w()),
        });
    }
    let (h, w) = (s.h() / 2, s.w() / 2);
    let out = Tensor::from_fn(Shape::new(s.n(), s.c(), h, w), |[n, c, y, x]| {
        upstream.at(n, c, 2 * y, 2 * x)
    });
    Ok(out)
}

/// Up-convolution: zero-stuffing upsampling followed by a stride-1
/// convolution padded so that the output is exactly twice the input size.
pub fn upconv2d<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let k = weights.shape().h();
    if k == 0 {
        return Err(Error::Shape {
            op: "upconv2d",
            message: "kernel must be non-empty".into(),
        });
    }
    check_dim(
        "upconv2d",
        Axis::Channels,
        weights.shape().c(),
        input.shape().c(),
    )?;
    conv2d(
        &upsample2x_zero_stuff(input),
        weights,
        bias,
        1,
        Padding::same(k),
    )
}

pub fn upconv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    upstream: &Tensor<T>,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    let k = weights.shape().h();
    if k == 0 {
        return Err(Error::Shape {
            op: "upconv2d_backward",
            message: "kernel must be non-empty".into(),
        });
    }
    let up = upsample2x_zero_stuff(input);
    let grads = conv2d_backward(&up, weights, 1, Padding::same(k), upstream, need_input_grad)?;
    let input_grad = match grads.input {
        Some(g) => Some(upsample2x_zero_stuff_backward(&g)?),
        None => None,
    };
    Ok(ConvGrads {
        input: input_grad,
        weights: grads.weights,
        bias: grads.bias,
    })
}

/// Number of learnable values in a K×K convolution: `K·K·in·out + out`.
pub fn conv_param_count(kernel: usize, in_c: usize, out_c: usize) -> usize {
    kernel * kernel * in_c * out_c + out_c
}
