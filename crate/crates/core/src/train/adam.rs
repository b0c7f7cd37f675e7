use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.eps > 0.0)
        {
            return Err(Error::Config(format!(
                "adam needs 0 <= beta1, beta2 < 1 and eps > 0 (got {}, {}, {})",
                self.beta1, self.beta2, self.eps
            )));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update of a flat tensor. `t` counts from 1.
pub fn adam_step<T: Scalar>(
    param: &mut [T],
    grad: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    lr: f64,
    cfg: &AdamConfig,
) {
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let m_hat = m[i].as_f64() / c1;
        let v_hat = v[i].as_f64() / c2;
        param[i] = T::of(param[i].as_f64() - lr * m_hat / (v_hat.sqrt() + cfg.eps));
    }
}

/// Moments for a fixed, ordered list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(lens: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = lens
            .into_iter()
            .map(|n| (alloc::vec![T::zero(); n], alloc::vec![T::zero(); n]))
            .unzip();
        AdamState { step: 0, m, v }
    }

    /// Applies one update to every tensor using its accumulated gradient.
    /// Tensors without a gradient are left untouched. A non-finite gradient
    /// aborts before anything is modified.
    pub fn update<'a>(
        &mut self,
        tensors: impl IntoIterator<Item = (String, &'a mut Tensor<T>)>,
        lr: f64,
        cfg: &AdamConfig,
    ) -> Result<()> {
        let mut tensors: Vec<(String, &'a mut Tensor<T>)> = tensors.into_iter().collect();
        if tensors.len() != self.m.len() {
            return Err(Error::State(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                tensors.len()
            )));
        }
        for (i, (name, t)) in tensors.iter().enumerate() {
            if t.len() != self.m[i].len() {
                return Err(Error::State(format!(
                    "{name}: optimizer state has the wrong length"
                )));
            }
            if let Some(g) = t.grad() {
                if let Some(j) = g.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Numerical {
                        layer: name.clone(),
                        detail: format!("non-finite gradient at entry {j}"),
                    });
                }
            }
        }
        self.step += 1;
        for (i, (_, t)) in tensors.iter_mut().enumerate() {
            let (value, grad) = match t.grad() {
                Some(_) => t.value_and_grad_mut(),
                None => continue,
            };
            adam_step(
                value,
                grad,
                &mut self.m[i],
                &mut self.v[i],
                self.step,
                lr,
                cfg,
            );
        }
        Ok(())
    }
}
