//! Executes a [`NetworkSpec`] forward and backward.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use crate::error::{Error, Result};
use crate::nets::{init_weights, Activation, LayerParams, NetworkSpec, INPUT};
use crate::ops::{backward_op, forward_op, leaky_relu, leaky_relu_backward, Aux};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Where a layer reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Input,
    Layer(usize),
}

/// A network specification together with its parameters.
///
/// Parameter gradients accumulate in the tensors' gradient buffers until
/// [`Network::zero_grad`] is called.
#[derive(Clone, Debug)]
pub struct Network<T> {
    spec: NetworkSpec,
    params: Vec<Option<LayerParams<T>>>,
    sources: Vec<Vec<Source>>,
}

/// Everything a forward pass recorded for the backward pass.
#[derive(Clone, Debug)]
pub struct Tape<T> {
    input: Tensor<T>,
    /// Layer outputs after activation.
    outputs: Vec<Tensor<T>>,
    /// Pre-activation values of layers with a nonlinearity.
    pre: Vec<Option<Tensor<T>>>,
    aux: Vec<Aux>,
}

impl<T: Scalar> Tape<T> {
    pub fn output(&self) -> &Tensor<T> {
        self.outputs.last().unwrap()
    }

    pub fn layer_output(&self, i: usize) -> &Tensor<T> {
        &self.outputs[i]
    }

    /// Hash of every activation sign and pooling choice. Two points with the
    /// same signature lie in the same linear piece of the network.
    pub fn kink_signature(&self) -> u64 {
        let mut h = Fnv::default();
        for pre in self.pre.iter().flatten() {
            for chunk in pre.data().chunks(64) {
                let mut bits = 0u64;
                for (i, v) in chunk.iter().enumerate() {
                    if *v < T::zero() {
                        bits |= 1 << i;
                    }
                }
                h.write_u64(bits);
            }
        }
        for aux in &self.aux {
            if let Aux::Argmax(a) = aux {
                for &i in a {
                    h.write_usize(i);
                }
            }
        }
        h.finish()
    }
}

#[derive(Default)]
struct Fnv(u64);

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        let mut h = if self.0 == 0 {
            0xcbf29ce484222325
        } else {
            self.0
        };
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        self.0 = h;
    }
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: NetworkSpec, params: Vec<Option<LayerParams<T>>>) -> Result<Self> {
        if params.len() != spec.layers().len() {
            return Err(Error::Config(format!(
                "{} parameter slots for {} layers",
                params.len(),
                spec.layers().len()
            )));
        }
        for (i, layer) in spec.layers().iter().enumerate() {
            let expected = layer.kind.param_shapes(spec.input_shapes(i)[0]);
            let found = params[i]
                .as_ref()
                .map(|p| (p.weights.shape(), p.bias.shape()));
            if expected != found {
                return Err(Error::Config(format!(
                    "layer {:?}: parameters {found:?} do not match expected {expected:?}",
                    layer.name
                )));
            }
        }
        let sources = spec
            .layers()
            .iter()
            .map(|l| {
                l.inputs
                    .iter()
                    .map(|n| {
                        if n == INPUT {
                            Source::Input
                        } else {
                            Source::Layer(spec.index_of(n).unwrap())
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Network {
            spec,
            params,
            sources,
        })
    }

    /// All parameters zero.
    pub fn zeros(spec: NetworkSpec) -> Self {
        let params = (0..spec.layers().len())
            .map(|i| {
                let (w, b) = spec.layers()[i]
                    .kind
                    .param_shapes(spec.input_shapes(i)[0])?;
                Some(LayerParams {
                    weights: Tensor::zeros(w),
                    bias: Tensor::zeros(b),
                })
            })
            .collect();
        Network::new(spec, params).unwrap()
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Option<LayerParams<T>>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Option<LayerParams<T>>] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<Option<LayerParams<T>>> {
        self.params
    }

    /// Parameter tensors in layer order, weights before bias.
    pub fn tensors(&self) -> impl Iterator<Item = (String, &Tensor<T>)> {
        self.spec
            .layers()
            .iter()
            .zip(&self.params)
            .flat_map(|(l, p)| {
                p.iter().flat_map(move |p| {
                    [
                        (format!("{}.weight", l.name), &p.weights),
                        (format!("{}.bias", l.name), &p.bias),
                    ]
                })
            })
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.params
            .iter_mut()
            .flatten()
            .flat_map(|p| [&mut p.weights, &mut p.bias])
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(|(_, t)| t.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            spec: self.spec.clone(),
            params: self
                .params
                .iter()
                .map(|p| {
                    p.as_ref().map(|p| LayerParams {
                        weights: p.weights.cast(),
                        bias: p.bias.cast(),
                    })
                })
                .collect(),
            sources: self.sources.clone(),
        }
    }

    pub fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.zero_grad();
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        let (c, h, w) = self.spec.input_shape();
        let s = input.shape();
        if (s.c(), s.h(), s.w()) != (c, h, w) {
            return Err(Error::Shape {
                op: "network",
                message: format!(
                    "{} expects items of {c}x{h}x{w}, got {}x{}x{}",
                    self.spec.name(),
                    s.c(),
                    s.h(),
                    s.w()
                ),
            });
        }
        Ok(())
    }

    fn layer_forward(
        &self,
        i: usize,
        inputs: &[&Tensor<T>],
    ) -> Result<(Tensor<T>, Option<Tensor<T>>, Aux)> {
        let layer = &self.spec.layers()[i];
        let params = self.params[i].as_ref().map(|p| (&p.weights, &p.bias));
        let (out, aux) = forward_op(&layer.kind, params, inputs)?;
        if !out.is_finite() {
            return Err(Error::Numerical {
                layer: layer.name.clone(),
                detail: "non-finite activation".into(),
            });
        }
        Ok(match layer.activation {
            Activation::Identity => (out, None, aux),
            Activation::LeakyRelu(s) => (leaky_relu(&out, T::of(s as f64)), Some(out), aux),
        })
    }

    /// Forward pass keeping everything needed for [`Network::backward`].
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tape<T>> {
        self.check_input(input)?;
        let n = self.spec.layers().len();
        let mut tape = Tape {
            input: input.clone(),
            outputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            aux: Vec::with_capacity(n),
        };
        for i in 0..n {
            let (out, pre, aux) = {
                let inputs: Vec<&Tensor<T>> = self.sources[i]
                    .iter()
                    .map(|s| match *s {
                        Source::Input => &tape.input,
                        Source::Layer(j) => &tape.outputs[j],
                    })
                    .collect();
                self.layer_forward(i, &inputs)?
            };
            tape.outputs.push(out);
            tape.pre.push(pre);
            tape.aux.push(aux);
        }
        Ok(tape)
    }

    /// Forward pass that frees intermediate results as soon as possible.
    pub fn predict(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(input)?;
        let n = self.spec.layers().len();
        let mut last_use = vec![0usize; n];
        for (i, srcs) in self.sources.iter().enumerate() {
            for s in srcs {
                if let Source::Layer(j) = *s {
                    last_use[j] = i;
                }
            }
        }
        let mut outputs: Vec<Option<Tensor<T>>> = vec![None; n];
        for i in 0..n {
            let out = {
                let inputs: Vec<&Tensor<T>> = self.sources[i]
                    .iter()
                    .map(|s| match *s {
                        Source::Input => input,
                        Source::Layer(j) => outputs[j].as_ref().unwrap(),
                    })
                    .collect();
                self.layer_forward(i, &inputs)?.0
            };
            for s in &self.sources[i] {
                if let Source::Layer(j) = *s {
                    if last_use[j] == i {
                        outputs[j] = None;
                    }
                }
            }
            outputs[i] = Some(out);
        }
        Ok(outputs.pop().flatten().unwrap())
    }

    /// Back-propagates `grad_output` (the loss gradient with respect to the
    /// network output) through the recorded tape, adding parameter
    /// gradients to the parameters' gradient buffers. Returns the gradient
    /// with respect to the input when requested.
    pub fn backward(
        &mut self,
        tape: &Tape<T>,
        grad_output: Tensor<T>,
        need_input_grad: bool,
    ) -> Result<Option<Tensor<T>>> {
        let n = self.spec.layers().len();
        if tape.outputs.len() != n {
            return Err(Error::State("tape does not belong to this network".into()));
        }
        if grad_output.shape() != tape.output().shape() {
            return Err(Error::Shape {
                op: "network_backward",
                message: format!(
                    "gradient {} for output {}",
                    grad_output.shape(),
                    tape.output().shape()
                ),
            });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; n];
        let mut input_grad: Option<Tensor<T>> = None;
        grads[n - 1] = Some(grad_output);
        for i in (0..n).rev() {
            let Some(mut g) = grads[i].take() else {
                continue;
            };
            let layer = &self.spec.layers()[i];
            if let (Activation::LeakyRelu(s), Some(pre)) = (layer.activation, &tape.pre[i]) {
                g = leaky_relu_backward(pre, T::of(s as f64), &g)?;
            }
            let inputs: Vec<&Tensor<T>> = self.sources[i]
                .iter()
                .map(|s| match *s {
                    Source::Input => &tape.input,
                    Source::Layer(j) => &tape.outputs[j],
                })
                .collect();
            let need = need_input_grad || self.sources[i].iter().any(|s| *s != Source::Input);
            let params = self.params[i].as_ref().map(|p| (&p.weights, &p.bias));
            let ng = backward_op(&layer.kind, params, &inputs, &tape.aux[i], &g, need)?;
            drop(g);
            if let Some(p) = self.params[i].as_mut() {
                if let Some(w) = ng.weights {
                    add_into(p.weights.grad_mut(), w.data());
                }
                if let Some(b) = ng.bias {
                    add_into(p.bias.grad_mut(), b.data());
                }
            }
            for (src, gi) in self.sources[i].iter().zip(ng.inputs) {
                let Some(gi) = gi else { continue };
                let slot = match *src {
                    Source::Input => {
                        if !need_input_grad {
                            continue;
                        }
                        &mut input_grad
                    }
                    Source::Layer(j) => &mut grads[j],
                };
                match slot {
                    Some(acc) => add_into(acc.data_mut(), gi.data()),
                    None => *slot = Some(gi),
                }
            }
        }
        Ok(input_grad)
    }
}

impl Network<f32> {
    /// He-initialized network.
    pub fn init(spec: NetworkSpec, rng: &mut Rng) -> Self {
        let params = init_weights(&spec, rng);
        Network::new(spec, params).unwrap()
    }
}

fn add_into<T: Scalar>(acc: &mut [T], x: &[T]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += *b;
    }
}

/// Shape of a batch of `n` network inputs.
pub fn batch_shape(item: (usize, usize, usize), n: usize) -> Shape {
    Shape::new(n, item.0, item.1, item.2)
}
