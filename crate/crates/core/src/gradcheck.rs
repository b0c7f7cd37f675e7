//! Central finite-difference checks of analytic gradients.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::ops::{mse_loss, mse_loss_grad};
use crate::tensor::Tensor;

/// A scalar function of several flat parameter tensors.
pub trait Objective {
    fn tensor_count(&self) -> usize;
    fn tensor_name(&self, t: usize) -> String;
    fn tensor_len(&self, t: usize) -> usize;
    fn get(&self, t: usize, i: usize) -> f64;
    fn set(&mut self, t: usize, i: usize, value: f64);
    fn loss(&mut self) -> Result<f64>;
    /// Analytic gradient of [`Objective::loss`], one vector per tensor.
    fn gradients(&mut self) -> Result<Vec<Vec<f64>>>;
    /// Identifier of the smooth piece containing the current point, if the
    /// objective is only piecewise smooth.
    fn region(&mut self) -> Result<Option<u64>> {
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    pub h: f64,
    pub tolerance: f64,
    /// Entries of each tensor to check, spread evenly; `None` checks all.
    pub max_entries_per_tensor: Option<usize>,
    /// Denominator floor of the relative error.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            h: 1e-5,
            tolerance: 1e-4,
            max_entries_per_tensor: None,
            floor: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Entries skipped because the perturbation crossed a kink.
    pub skipped: usize,
    pub max_relative_error: f64,
    pub mismatches: Vec<Mismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.mismatches.is_empty()
    }
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares every (or a strided subset of) analytic gradient entry with
/// `(L(θ+h) − L(θ−h)) / 2h`.
pub fn finite_difference_check<O: Objective + ?Sized>(
    objective: &mut O,
    options: &GradCheckOptions,
) -> Result<GradCheckReport> {
    if !(options.h > 0.0) {
        return Err(Error::Validation("step h must be positive".into()));
    }
    let analytic = objective.gradients()?;
    let base_region = objective.region()?;
    let mut report = GradCheckReport::default();
    for t in 0..objective.tensor_count() {
        let len = objective.tensor_len(t);
        let step = match options.max_entries_per_tensor {
            Some(m) if m > 0 && len > m => len.div_ceil(m),
            _ => 1,
        };
        let mut i = 0;
        while i < len {
            let orig = objective.get(t, i);
            objective.set(t, i, orig + options.h);
            let plus = objective.loss()?;
            let r_plus = objective.region()?;
            objective.set(t, i, orig - options.h);
            let minus = objective.loss()?;
            let r_minus = objective.region()?;
            objective.set(t, i, orig);
            if r_plus != base_region || r_minus != base_region {
                report.skipped += 1;
            } else {
                let numeric = (plus - minus) / (2.0 * options.h);
                let a = analytic[t][i];
                let rel = relative_error(a, numeric, options.floor);
                report.checked += 1;
                report.max_relative_error = report.max_relative_error.max(rel);
                if !(rel < options.tolerance) {
                    report.mismatches.push(Mismatch {
                        tensor: objective.tensor_name(t),
                        index: i,
                        analytic: a,
                        numeric,
                        relative: rel,
                    });
                }
            }
            i += step;
        }
    }
    Ok(report)
}

type LossFn = Box<dyn FnMut(&[Vec<f64>]) -> Result<f64>>;
type GradFn = Box<dyn FnMut(&[Vec<f64>]) -> Result<Vec<Vec<f64>>>>;

/// Objective defined by closures over flat tensors.
pub struct FnObjective {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    loss: LossFn,
    grad: GradFn,
}

impl FnObjective {
    pub fn new(
        tensors: Vec<(String, Vec<f64>)>,
        loss: impl FnMut(&[Vec<f64>]) -> Result<f64> + 'static,
        grad: impl FnMut(&[Vec<f64>]) -> Result<Vec<Vec<f64>>> + 'static,
    ) -> Self {
        let (names, values) = tensors.into_iter().unzip();
        FnObjective {
            names,
            values,
            loss: Box::new(loss),
            grad: Box::new(grad),
        }
    }
}

impl Objective for FnObjective {
    fn tensor_count(&self) -> usize {
        self.values.len()
    }
    fn tensor_name(&self, t: usize) -> String {
        self.names[t].clone()
    }
    fn tensor_len(&self, t: usize) -> usize {
        self.values[t].len()
    }
    fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t][i]
    }
    fn set(&mut self, t: usize, i: usize, value: f64) {
        self.values[t][i] = value;
    }
    fn loss(&mut self) -> Result<f64> {
        (self.loss)(&self.values)
    }
    fn gradients(&mut self) -> Result<Vec<Vec<f64>>> {
        (self.grad)(&self.values)
    }
}

/// MSE between a network's output and a fixed target, as a function of the
/// network parameters and (optionally) its input. Kinks of leaky ReLUs and
/// max-pooling are reported as regions.
pub struct NetworkObjective {
    pub network: Network<f64>,
    pub input: Tensor<f64>,
    pub target: Tensor<f64>,
    pub include_input: bool,
    /// Kink signature of the most recent forward pass.
    region: Option<u64>,
}

impl NetworkObjective {
    pub fn new(
        network: Network<f64>,
        input: Tensor<f64>,
        target: Tensor<f64>,
        include_input: bool,
    ) -> Self {
        NetworkObjective {
            network,
            input,
            target,
            include_input,
            region: None,
        }
    }

    fn tensor_mut(&mut self, t: usize) -> &mut Tensor<f64> {
        if self.include_input {
            if t == 0 {
                return &mut self.input;
            }
            return self.network.tensors_mut().nth(t - 1).unwrap();
        }
        self.network.tensors_mut().nth(t).unwrap()
    }

    fn tensor_ref(&self, t: usize) -> &Tensor<f64> {
        if self.include_input {
            if t == 0 {
                return &self.input;
            }
            return self.network.tensors().nth(t - 1).unwrap().1;
        }
        self.network.tensors().nth(t).unwrap().1
    }
}

impl Objective for NetworkObjective {
    fn tensor_count(&self) -> usize {
        self.network.tensors().count() + self.include_input as usize
    }
    fn tensor_name(&self, t: usize) -> String {
        match (self.include_input, t) {
            (true, 0) => "input".into(),
            (true, t) => self.network.tensors().nth(t - 1).unwrap().0,
            (false, t) => self.network.tensors().nth(t).unwrap().0,
        }
    }
    fn tensor_len(&self, t: usize) -> usize {
        self.tensor_ref(t).len()
    }
    fn get(&self, t: usize, i: usize) -> f64 {
        self.tensor_ref(t).data()[i]
    }
    fn set(&mut self, t: usize, i: usize, value: f64) {
        self.tensor_mut(t).data_mut()[i] = value;
    }
    fn loss(&mut self) -> Result<f64> {
        let tape = self.network.forward(&self.input)?;
        self.region = Some(tape.kink_signature());
        mse_loss(tape.output(), &self.target)
    }
    fn gradients(&mut self) -> Result<Vec<Vec<f64>>> {
        self.network.zero_grad();
        let tape = self.network.forward(&self.input)?;
        self.region = Some(tape.kink_signature());
        let g = mse_loss_grad(tape.output(), &self.target)?;
        let input_grad = self.network.backward(&tape, g, self.include_input)?;
        let mut out = Vec::new();
        if let Some(ig) = input_grad {
            out.push(ig.into_data());
        }
        for (name, t) in self.network.tensors() {
            let g = t
                .grad()
                .ok_or_else(|| Error::State(format!("{name} received no gradient")))?;
            out.push(g.to_vec());
        }
        Ok(out)
    }
    fn region(&mut self) -> Result<Option<u64>> {
        if self.region.is_none() {
            self.region = Some(self.network.forward(&self.input)?.kink_signature());
        }
        Ok(self.region)
    }
}
