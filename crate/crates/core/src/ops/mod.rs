//! Forward and reverse-mode operations for every layer kind used by the
//! inversion networks and the toy encoder.

mod activation;
mod concat;
mod conv;
mod dense;
mod loss;
mod pool;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use activation::{leaky_relu, leaky_relu_backward};
pub use concat::{concat_channels, split_channels};
pub use conv::{
    conv2d, conv2d_backward, conv_output_len, conv_param_count, upconv2d, upconv2d_backward,
    upsample2x_zero_stuff, upsample2x_zero_stuff_backward, ConvGrads, Padding,
};
pub use dense::{fully_connected, fully_connected_backward, DenseGrads};
pub use loss::{mse_loss, mse_loss_grad, softmax_cross_entropy};
pub use pool::{max_pool2d, max_pool2d_backward, Pooled};

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Per-item extent (channels, height, width).
pub type ItemShape = (usize, usize, usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpKind {
    Conv {
        kernel: usize,
        stride: usize,
        out_channels: usize,
    },
    /// 2× zero-stuffing upsampling followed by a stride-1 convolution.
    UpConv {
        kernel: usize,
        out_channels: usize,
    },
    Fc {
        out_features: usize,
    },
    LeakyRelu {
        slope: f32,
    },
    MaxPool {
        window: usize,
        stride: usize,
    },
    Concat,
    Reshape {
        channels: usize,
        height: usize,
        width: usize,
    },
    Mse,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Conv { .. } => "conv",
            OpKind::UpConv { .. } => "upconv",
            OpKind::Fc { .. } => "fc",
            OpKind::LeakyRelu { .. } => "leaky_relu",
            OpKind::MaxPool { .. } => "maxpool",
            OpKind::Concat => "concat",
            OpKind::Reshape { .. } => "reshape",
            OpKind::Mse => "mse",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            OpKind::Concat | OpKind::Mse => 2,
            _ => 1,
        }
    }

    /// Weight and bias shapes for parameterized kinds.
    pub fn param_shapes(&self, input: ItemShape) -> Option<(Shape, Shape)> {
        let (c, h, w) = input;
        match *self {
            OpKind::Conv {
                kernel,
                out_channels,
                ..
            }
            | OpKind::UpConv {
                kernel,
                out_channels,
            } => Some((
                Shape::new(out_channels, c, kernel, kernel),
                Shape::vector(1, out_channels),
            )),
            OpKind::Fc { out_features } => Some((
                Shape::new(out_features, c * h * w, 1, 1),
                Shape::vector(1, out_features),
            )),
            _ => None,
        }
    }

    /// Symbolic shape propagation.
    pub fn output_shape(&self, inputs: &[ItemShape]) -> Result<ItemShape> {
        if inputs.len() != self.arity() {
            return Err(Error::Shape {
                op: self.name(),
                message: format!("expected {} inputs, got {}", self.arity(), inputs.len()),
            });
        }
        let (c, h, w) = inputs[0];
        match *self {
            OpKind::Conv {
                kernel,
                stride,
                out_channels,
            } => {
                let p = Padding::same(kernel);
                let oh = conv_output_len(h, kernel, stride, p.top, p.bottom);
                let ow = conv_output_len(w, kernel, stride, p.left, p.right);
                match (oh, ow) {
                    (Some(oh), Some(ow)) => Ok((out_channels, oh, ow)),
                    _ => Err(Error::Shape {
                        op: "conv",
                        message: format!("input {h}x{w} too small for kernel {kernel}"),
                    }),
                }
            }
            OpKind::UpConv { out_channels, .. } => Ok((out_channels, 2 * h, 2 * w)),
            OpKind::Fc { out_features } => Ok((out_features, 1, 1)),
            OpKind::LeakyRelu { .. } => Ok((c, h, w)),
            OpKind::MaxPool { window, stride } => {
                if window > h || window > w || stride == 0 {
                    return Err(Error::Shape {
                        op: "maxpool",
                        message: format!("window {window} exceeds input {h}x{w}"),
                    });
                }
                Ok((c, (h - window) / stride + 1, (w - window) / stride + 1))
            }
            OpKind::Concat => {
                let (c2, h2, w2) = inputs[1];
                check_dim("concat", Axis::Height, h, h2)?;
                check_dim("concat", Axis::Width, w, w2)?;
                Ok((c + c2, h, w))
            }
            OpKind::Reshape {
                channels,
                height,
                width,
            } => {
                check_dim(
                    "reshape",
                    Axis::Length,
                    c * h * w,
                    channels * height * width,
                )?;
                Ok((channels, height, width))
            }
            OpKind::Mse => Ok((1, 1, 1)),
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values the backward pass needs beyond the forward inputs.
#[derive(Clone, Debug, Default)]
pub enum Aux {
    #[default]
    None,
    Argmax(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct NodeGrads<T> {
    /// One entry per forward input; `None` when not requested.
    pub inputs: Vec<Option<Tensor<T>>>,
    pub weights: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
}

pub(crate) fn forward_op<T: Scalar>(
    kind: &OpKind,
    params: Option<(&Tensor<T>, &Tensor<T>)>,
    inputs: &[&Tensor<T>],
) -> Result<(Tensor<T>, Aux)> {
    if inputs.len() != kind.arity() {
        return Err(Error::Shape {
            op: kind.name(),
            message: format!("expected {} inputs, got {}", kind.arity(), inputs.len()),
        });
    }
    let x = inputs[0];
    let need_params =
        || params.ok_or_else(|| Error::State(format!("{} node has no parameters", kind.name())));
    let out = match *kind {
        OpKind::Conv { kernel, stride, .. } => {
            let (w, b) = need_params()?;
            conv2d(x, w, b, stride, Padding::same(kernel))?
        }
        OpKind::UpConv { .. } => {
            let (w, b) = need_params()?;
            upconv2d(x, w, b)?
        }
        OpKind::Fc { .. } => {
            let (w, b) = need_params()?;
            fully_connected(x, w, b)?
        }
        OpKind::LeakyRelu { slope } => leaky_relu(x, T::of(slope as f64)),
        OpKind::MaxPool { window, stride } => {
            let p = max_pool2d(x, window, stride)?;
            return Ok((p.output, Aux::Argmax(p.argmax)));
        }
        OpKind::Concat => concat_channels(x, inputs[1])?,
        OpKind::Reshape {
            channels,
            height,
            width,
        } => x
            .clone()
            .reshape(Shape::new(x.shape().n(), channels, height, width))?,
        OpKind::Mse => {
            let loss = mse_loss(x, inputs[1])?;
            Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![T::of(loss)])?
        }
    };
    Ok((out, Aux::None))
}

pub(crate) fn backward_op<T: Scalar>(
    kind: &OpKind,
    params: Option<(&Tensor<T>, &Tensor<T>)>,
    inputs: &[&Tensor<T>],
    aux: &Aux,
    upstream: &Tensor<T>,
    need_input_grad: bool,
) -> Result<NodeGrads<T>> {
    let x = inputs[0];
    let need_params =
        || params.ok_or_else(|| Error::State(format!("{} node has no parameters", kind.name())));
    let single = |g: Option<Tensor<T>>| NodeGrads {
        inputs: vec![g],
        weights: None,
        bias: None,
    };
    Ok(match *kind {
        OpKind::Conv { kernel, stride, .. } => {
            let (w, _) = need_params()?;
            let g = conv2d_backward(
                x,
                w,
                stride,
                Padding::same(kernel),
                upstream,
                need_input_grad,
            )?;
            NodeGrads {
                inputs: vec![g.input],
                weights: Some(g.weights),
                bias: Some(g.bias),
            }
        }
        OpKind::UpConv { .. } => {
            let (w, _) = need_params()?;
            let g = upconv2d_backward(x, w, upstream, need_input_grad)?;
            NodeGrads {
                inputs: vec![g.input],
                weights: Some(g.weights),
                bias: Some(g.bias),
            }
        }
        OpKind::Fc { .. } => {
            let (w, _) = need_params()?;
            let g = fully_connected_backward(x, w, upstream, need_input_grad)?;
            NodeGrads {
                inputs: vec![g.input],
                weights: Some(g.weights),
                bias: Some(g.bias),
            }
        }
        OpKind::LeakyRelu { slope } => {
            single(Some(leaky_relu_backward(x, T::of(slope as f64), upstream)?))
        }
        OpKind::MaxPool { .. } => match aux {
            Aux::Argmax(argmax) => single(Some(max_pool2d_backward(x.shape(), argmax, upstream)?)),
            Aux::None => return Err(Error::State("maxpool backward without argmax cache".into())),
        },
        OpKind::Concat => {
            let (a, b) = split_channels(upstream, x.shape().c())?;
            NodeGrads {
                inputs: vec![Some(a), Some(b)],
                weights: None,
                bias: None,
            }
        }
        OpKind::Reshape { .. } => single(Some(upstream.clone().reshape(x.shape())?)),
        OpKind::Mse => {
            check_dim("mse_backward", Axis::Length, 1, upstream.len())?;
            let scale = upstream.data()[0];
            let g = mse_loss_grad(x, inputs[1])?.map(|v| v * scale);
            NodeGrads {
                inputs: vec![Some(g), None],
                weights: None,
                bias: None,
            }
        }
    })
}

/// A single operation with its parameters and a forward cache.
///
/// `forward` stores copies of its inputs; `backward` consumes them and
/// fails with a state error if no forward pass preceded it.
#[derive(Clone, Debug)]
pub struct OpNode<T> {
    pub kind: OpKind,
    pub weights: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
    cache: Option<(Vec<Tensor<T>>, Aux)>,
}

impl<T: Scalar> OpNode<T> {
    /// Node with zero-initialized parameters sized for `input`.
    pub fn new(kind: OpKind, input: ItemShape) -> Self {
        let (weights, bias) = match kind.param_shapes(input) {
            Some((w, b)) => (Some(Tensor::zeros(w)), Some(Tensor::zeros(b))),
            None => (None, None),
        };
        OpNode {
            kind,
            weights,
            bias,
            cache: None,
        }
    }

    pub fn with_params(kind: OpKind, weights: Tensor<T>, bias: Tensor<T>) -> Self {
        OpNode {
            kind,
            weights: Some(weights),
            bias: Some(bias),
            cache: None,
        }
    }

    fn params(&self) -> Option<(&Tensor<T>, &Tensor<T>)> {
        match (&self.weights, &self.bias) {
            (Some(w), Some(b)) => Some((w, b)),
            _ => None,
        }
    }

    pub fn forward(&mut self, inputs: &[&Tensor<T>]) -> Result<Tensor<T>> {
        let (out, aux) = forward_op(&self.kind, self.params(), inputs)?;
        self.cache = Some((inputs.iter().map(|t| (*t).clone()).collect(), aux));
        Ok(out)
    }

    pub fn backward(&self, upstream: &Tensor<T>) -> Result<NodeGrads<T>> {
        let (inputs, aux) = self.cache.as_ref().ok_or_else(|| {
            Error::State(format!(
                "{} backward called before forward",
                self.kind.name()
            ))
        })?;
        let refs: Vec<&Tensor<T>> = inputs.iter().collect();
        backward_op(&self.kind, self.params(), &refs, aux, upstream, true)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
