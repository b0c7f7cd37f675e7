use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::adam::{AdamConfig, AdamState};
use super::data::TrainingData;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::ops::{mse_loss, mse_loss_grad, softmax_cross_entropy};
use crate::rng::{self, STATE_LEN};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Only the decoder learns; inputs are precomputed features.
    FixedEncoder,
    /// Inputs are images; encoder and decoder learn jointly.
    Autoencoder,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::FixedEncoder => "fixed_encoder",
            Mode::Autoencoder => "autoencoder",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "fixed_encoder" => Ok(Mode::FixedEncoder),
            "autoencoder" => Ok(Mode::Autoencoder),
            other => Err(Error::Usage(format!("unknown training mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub adam: AdamConfig,
    pub batch: usize,
    pub steps: u64,
    /// `(step, factor)`: from `step` on, the learning rate is multiplied by `factor`.
    pub lr_decay: Vec<(u64, f64)>,
    pub mode: Mode,
    pub seed: u64,
    /// Training aborts once a batch loss exceeds this multiple of the first.
    pub divergence_factor: f64,
}

impl TrainConfig {
    pub fn new(steps: u64, batch: usize, seed: u64) -> Self {
        TrainConfig {
            lr: 1e-3,
            adam: AdamConfig::default(),
            batch,
            steps,
            lr_decay: Self::default_decay(steps),
            mode: Mode::FixedEncoder,
            seed,
            divergence_factor: 1e3,
        }
    }

    /// ×0.3 at 60 % and again at 85 % of the run.
    pub fn default_decay(steps: u64) -> Vec<(u64, f64)> {
        vec![(steps * 6 / 10, 0.3), (steps * 85 / 100, 0.3)]
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        self.lr_decay
            .iter()
            .filter(|(s, _)| step >= *s)
            .fold(self.lr, |lr, (_, f)| lr * f)
    }

    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if !(self.lr > 0.0) || self.batch == 0 {
            return Err(Error::Config(format!(
                "need lr > 0 and batch >= 1 (got {}, {})",
                self.lr, self.batch
            )));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::Config("divergence factor must exceed 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch order: one seeded permutation per epoch, so the batch at any
/// step is a pure function of (seed, step).
#[derive(Clone, Debug)]
pub struct BatchSampler {
    seed: u64,
    batch: usize,
    n: usize,
    cache: Option<(u64, Vec<usize>)>,
}

impl BatchSampler {
    pub fn new(seed: u64, batch: usize, n: usize) -> Self {
        BatchSampler {
            seed,
            batch,
            n,
            cache: None,
        }
    }

    fn permutation(&mut self, epoch: u64) -> &[usize] {
        if self.cache.as_ref().map(|c| c.0) != Some(epoch) {
            let mut order: Vec<usize> = (0..self.n).collect();
            order.shuffle(&mut rng::stream(self.seed, epoch));
            self.cache = Some((epoch, order));
        }
        &self.cache.as_ref().unwrap().1
    }

    pub fn indices(&mut self, step: u64) -> Vec<usize> {
        (0..self.batch as u64)
            .map(|i| {
                let pos = step * self.batch as u64 + i;
                let n = self.n as u64;
                self.permutation(pos / n)[(pos % n) as usize]
            })
            .collect()
    }

    /// Generator state behind the permutation used at `step`.
    pub fn rng_state(&self, step: u64) -> [u8; STATE_LEN] {
        let epoch = step * self.batch as u64 / self.n as u64;
        let mut r = rng::stream(self.seed, epoch);
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(&mut r);
        rng::save_state(&r)
    }
}

/// Everything needed to resume a run bit-exactly.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    /// Free-form `key=value` lines describing the run.
    pub meta: String,
    pub encoder: Option<Network<f32>>,
    pub decoder: Network<f32>,
    pub adam: AdamState<f32>,
    pub step: u64,
    pub rng_state: [u8; STATE_LEN],
    pub losses: Vec<f64>,
}

/// Adam training of a decoder, optionally jointly with its encoder.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainConfig,
    pub encoder: Option<Network<f32>>,
    pub decoder: Network<f32>,
    pub adam: AdamState<f32>,
    pub step: u64,
    pub losses: Vec<f64>,
    best: Option<(f64, Vec<Tensor<f32>>)>,
    sampler: Option<BatchSampler>,
}

fn tensor_lens(encoder: &Option<Network<f32>>, decoder: &Network<f32>) -> Vec<usize> {
    encoder
        .iter()
        .flat_map(|e| e.tensors().map(|(_, t)| t.len()).collect::<Vec<_>>())
        .chain(decoder.tensors().map(|(_, t)| t.len()))
        .collect()
}

impl Trainer {
    pub fn new(
        config: TrainConfig,
        encoder: Option<Network<f32>>,
        decoder: Network<f32>,
    ) -> Result<Self> {
        config.validate()?;
        match (config.mode, &encoder) {
            (Mode::Autoencoder, None) => {
                return Err(Error::Config("autoencoder mode needs an encoder".into()));
            }
            (Mode::FixedEncoder, Some(_)) => {
                return Err(Error::Config(
                    "fixed-encoder mode takes precomputed features, not an encoder".into(),
                ));
            }
            _ => {}
        }
        if let Some(e) = &encoder {
            if e.spec().output_shape() != decoder.spec().input_shape() {
                return Err(Error::Config(format!(
                    "encoder output {:?} does not match decoder input {:?}",
                    e.spec().output_shape(),
                    decoder.spec().input_shape()
                )));
            }
        }
        let adam = AdamState::new(tensor_lens(&encoder, &decoder));
        Ok(Trainer {
            config,
            encoder,
            decoder,
            adam,
            step: 0,
            losses: Vec::new(),
            best: None,
            sampler: None,
        })
    }

    pub fn from_checkpoint(config: TrainConfig, cp: Checkpoint) -> Result<Self> {
        let mut t = Trainer::new(config, cp.encoder, cp.decoder)?;
        let lens = tensor_lens(&t.encoder, &t.decoder);
        if cp.adam.m.len() != lens.len() || cp.adam.m.iter().zip(&lens).any(|(m, l)| m.len() != *l)
        {
            return Err(Error::Validation(
                "optimizer state does not match the networks".into(),
            ));
        }
        if cp.losses.len() as u64 != cp.step {
            return Err(Error::Validation(
                "loss history length differs from step count".into(),
            ));
        }
        rng::restore_state(&cp.rng_state)?;
        t.adam = cp.adam;
        t.step = cp.step;
        t.losses = cp.losses;
        Ok(t)
    }

    pub fn checkpoint(&self, meta: String, data_len: usize) -> Checkpoint {
        let sampler = BatchSampler::new(self.config.seed, self.config.batch, data_len.max(1));
        Checkpoint {
            meta,
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
            adam: self.adam.clone(),
            step: self.step,
            rng_state: sampler.rng_state(self.step),
            losses: self.losses.clone(),
        }
    }

    fn snapshot(&self) -> Vec<Tensor<f32>> {
        let mut out: Vec<Tensor<f32>> = Vec::new();
        if let Some(e) = &self.encoder {
            out.extend(e.tensors().map(|(_, t)| t.clone()));
        }
        out.extend(self.decoder.tensors().map(|(_, t)| t.clone()));
        out
    }

    fn all_tensors(&mut self) -> Vec<(String, &mut Tensor<f32>)> {
        let mut out = Vec::new();
        if let Some(e) = self.encoder.as_mut() {
            let names: Vec<String> = e.tensors().map(|(n, _)| format!("encoder.{n}")).collect();
            out.extend(names.into_iter().zip(e.tensors_mut()));
        }
        let names: Vec<String> = self.decoder.tensors().map(|(n, _)| n).collect();
        out.extend(names.into_iter().zip(self.decoder.tensors_mut()));
        out
    }

    /// Puts back the parameters of the lowest-loss step seen so far.
    pub fn restore_best(&mut self) {
        if let Some((_, saved)) = self.best.take() {
            for ((_, t), s) in self.all_tensors().into_iter().zip(saved) {
                *t = s;
            }
        }
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.0)
    }

    fn forward_backward(&mut self, x: &Tensor<f32>, y: &Tensor<f32>) -> Result<f64> {
        self.decoder.zero_grad();
        if let Some(e) = self.encoder.as_mut() {
            e.zero_grad();
        }
        let enc_tape = match &self.encoder {
            Some(e) => Some(e.forward(x)?),
            None => None,
        };
        let dec_input = enc_tape.as_ref().map(|t| t.output()).unwrap_or(x);
        let tape = self.decoder.forward(dec_input)?;
        let loss = mse_loss(tape.output(), y)?;
        if !loss.is_finite() {
            return Err(Error::Numerical {
                layer: String::from("loss"),
                detail: format!("non-finite loss at step {}", self.step),
            });
        }
        let g = mse_loss_grad(tape.output(), y)?;
        let g_in = self.decoder.backward(&tape, g, enc_tape.is_some())?;
        if let (Some(e), Some(et), Some(gi)) = (self.encoder.as_mut(), enc_tape.as_ref(), g_in) {
            e.backward(et, gi, false)?;
        }
        Ok(loss)
    }

    /// One optimization step on the next mini-batch; returns its loss
    /// (measured before the update).
    pub fn step(&mut self, data: &TrainingData) -> Result<f64> {
        let n = data.len();
        if self.sampler.as_ref().map(|s| s.n) != Some(n) {
            self.sampler = Some(BatchSampler::new(self.config.seed, self.config.batch, n));
        }
        let idx = self.sampler.as_mut().unwrap().indices(self.step);
        let (x, y) = data.batch(&idx)?;
        let loss = match self.forward_backward(&x, &y) {
            Ok(l) => l,
            Err(e) => {
                self.restore_best();
                return Err(e);
            }
        };
        if let Some(&initial) = self.losses.first() {
            let limit = self.config.divergence_factor * initial;
            if loss > limit {
                self.restore_best();
                return Err(Error::Diverged {
                    step: self.step,
                    loss,
                    limit,
                });
            }
        }
        if self.best.as_ref().is_none_or(|b| loss < b.0) {
            self.best = Some((loss, self.snapshot()));
        }
        let lr = self.config.lr_at(self.step);
        let cfg = self.config.adam;
        let mut adam = core::mem::replace(&mut self.adam, AdamState::new([]));
        let result = adam.update(self.all_tensors(), lr, &cfg);
        self.adam = adam;
        if let Err(e) = result {
            self.restore_best();
            return Err(e);
        }
        self.step += 1;
        self.losses.push(loss);
        Ok(loss)
    }

    /// Steps until `config.steps`, calling `after_step` after each one.
    pub fn run(
        &mut self,
        data: &TrainingData,
        mut after_step: impl FnMut(&Trainer) -> Result<()>,
    ) -> Result<()> {
        while self.step < self.config.steps {
            self.step(data)?;
            after_step(self)?;
        }
        Ok(())
    }

    /// Decoder output (centered) for a set of inputs, in batches.
    pub fn predict(&self, inputs: &[Tensor<f32>], batch: usize) -> Result<Vec<Tensor<f32>>> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(batch.max(1)) {
            let x = Tensor::stack(&chunk.iter().collect::<Vec<_>>())?;
            let x = match &self.encoder {
                Some(e) => e.predict(&x)?,
                None => x,
            };
            let y = self.decoder.predict(&x)?;
            out.extend((0..chunk.len()).map(|i| y.item(i)));
        }
        Ok(out)
    }
}

/// Runs `network` over `inputs` in batches and returns per-item outputs.
pub fn encode_all(
    network: &Network<f32>,
    inputs: &[Tensor<f32>],
    batch: usize,
) -> Result<Vec<Tensor<f32>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch.max(1)) {
        let x = Tensor::stack(&chunk.iter().collect::<Vec<_>>())?;
        let y = network.predict(&x)?;
        out.extend((0..chunk.len()).map(|i| y.item(i)));
    }
    Ok(out)
}

/// Softmax cross-entropy training of a classifier whose last layer emits
/// one score per class. Returns the per-step losses.
pub fn train_classifier(
    network: &mut Network<f32>,
    images: &[Tensor<f32>],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if images.is_empty() || images.len() != labels.len() {
        return Err(Error::Validation(format!(
            "{} images for {} labels",
            images.len(),
            labels.len()
        )));
    }
    let lens: Vec<usize> = network.tensors().map(|(_, t)| t.len()).collect();
    let mut adam = AdamState::new(lens);
    let mut sampler = BatchSampler::new(config.seed, config.batch, images.len());
    let mut losses = Vec::with_capacity(config.steps as usize);
    for step in 0..config.steps {
        let idx = sampler.indices(step);
        let x = Tensor::stack(&idx.iter().map(|&i| &images[i]).collect::<Vec<_>>())?;
        let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        network.zero_grad();
        let tape = network.forward(&x)?;
        let (loss, g) = softmax_cross_entropy(tape.output(), &y)?;
        network.backward(&tape, g, false)?;
        let names: Vec<String> = network.tensors().map(|(n, _)| n).collect();
        adam.update(
            names.into_iter().zip(network.tensors_mut()),
            config.lr_at(step),
            &config.adam,
        )?;
        losses.push(loss);
    }
    Ok(losses)
}
