//! Dense 4-D tensors in (batch, channels, height, width) order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Axis, Error, Result};
use crate::scalar::Scalar;
#[allow(unused_imports)]
use num_traits::Float;

/// Extent of a tensor along (batch, channels, height, width).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(pub [usize; 4]);

impl Shape {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape([n, c, h, w])
    }

    /// Shape of a batch of flat vectors, stored as (n, len, 1, 1).
    pub const fn vector(n: usize, len: usize) -> Self {
        Shape([n, len, 1, 1])
    }

    pub const fn n(&self) -> usize {
        self.0[0]
    }

    pub const fn c(&self) -> usize {
        self.0[1]
    }

    pub const fn h(&self) -> usize {
        self.0[2]
    }

    pub const fn w(&self) -> usize {
        self.0[3]
    }

    pub const fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2] * self.0[3]
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements in one batch item.
    pub const fn item_len(&self) -> usize {
        self.0[1] * self.0[2] * self.0[3]
    }

    pub const fn with_batch(self, n: usize) -> Self {
        Shape([n, self.0[1], self.0[2], self.0[3]])
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.0[1] + c) * self.0[2] + h) * self.0[3] + w
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: Shape, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
            grad: None,
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        check_dim("tensor", Axis::Length, shape.len(), data.len())?;
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut([usize; 4]) -> T) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for n in 0..shape.n() {
            for c in 0..shape.c() {
                for h in 0..shape.h() {
                    for w in 0..shape.w() {
                        data.push(f([n, c, h, w]));
                    }
                }
            }
        }
        Tensor {
            shape,
            data,
            grad: None,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, h: usize, w: usize) -> T {
        self.data[self.shape.offset(n, c, h, w)]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, c: usize, h: usize, w: usize) -> &mut T {
        let i = self.shape.offset(n, c, h, w);
        &mut self.data[i]
    }

    /// Same data under a new shape with identical element count.
    pub fn reshape(mut self, shape: Shape) -> Result<Self> {
        check_dim("reshape", Axis::Length, self.data.len(), shape.len())?;
        self.shape = shape;
        if let Some(g) = &self.grad {
            debug_assert_eq!(g.len(), shape.len());
        }
        Ok(self)
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&x| f(x)).collect(),
            grad: None,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&x| U::of(x.as_f64())).collect(),
            grad: None,
        }
    }

    /// Copy of batch item `index` as a batch of one.
    pub fn item(&self, index: usize) -> Tensor<T> {
        let len = self.shape.item_len();
        Tensor {
            shape: self.shape.with_batch(1),
            data: self.data[index * len..(index + 1) * len].to_vec(),
            grad: None,
        }
    }

    pub fn item_data(&self, index: usize) -> &[T] {
        let len = self.shape.item_len();
        &self.data[index * len..(index + 1) * len]
    }

    /// Concatenates tensors along the batch axis.
    pub fn stack(items: &[&Tensor<T>]) -> Result<Tensor<T>> {
        let first = items.first().ok_or_else(|| Error::Shape {
            op: "stack",
            message: "no tensors to stack".into(),
        })?;
        let inner = first.shape;
        let mut data = Vec::with_capacity(inner.len() * items.len());
        let mut n = 0;
        for t in items {
            check_dim("stack", Axis::Channels, inner.c(), t.shape.c())?;
            check_dim("stack", Axis::Height, inner.h(), t.shape.h())?;
            check_dim("stack", Axis::Width, inner.w(), t.shape.w())?;
            data.extend_from_slice(&t.data);
            n += t.shape.n();
        }
        Tensor::from_vec(inner.with_batch(n), data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|x| x.as_f64()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| {
                let v = x.as_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated as zeros on first use.
    pub fn grad_mut(&mut self) -> &mut [T] {
        let len = self.data.len();
        self.grad.get_or_insert_with(|| vec![T::zero(); len])
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    /// Splits into (values, gradient) for in-place optimizer updates.
    pub fn value_and_grad_mut(&mut self) -> (&mut [T], &mut [T]) {
        let len = self.data.len();
        let grad = self.grad.get_or_insert_with(|| vec![T::zero(); len]);
        (&mut self.data, grad)
    }
}
