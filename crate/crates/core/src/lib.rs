//! Core algorithms for inverting image feature representations with
//! up-convolutional networks.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It provides:
//!
//! * [`tensor`], [`ops`], [`network`] and [`gradcheck`]: a small dense tensor
//!   type with reverse-mode gradients for convolution, up-convolution, dense,
//!   leaky ReLU, max-pooling, concatenation and reshape layers.
//! * [`features`]: grayscale conversion, Felzenszwalb HOG, uniform LBP and a
//!   sparse SIFT detector with its grid encoding.
//! * [`nets`]: declarative network specifications for the HOG, LBP, SIFT,
//!   convolutional and fully connected inversion networks and a toy encoder.
//! * [`train`]: Adam, the training loop, and the normalized reconstruction
//!   error.
//! * [`analysis`]: feature perturbations, interpolation and random feature
//!   sampling.
#![no_std]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod features;
pub mod gradcheck;
pub mod image;
pub mod nets;
pub mod network;
pub mod ops;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Axis, Error, Result};
pub use scalar::{DType, Scalar};
pub use tensor::{Shape, Tensor};
