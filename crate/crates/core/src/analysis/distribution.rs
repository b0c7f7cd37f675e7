use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    Histogram { bins: usize },
    TruncGaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistributionModel {
    /// Per dimension: equal-width bins over the observed non-zero range.
    Histogram {
        /// (min, max) of the non-zero values; (0, 0) if there are none.
        ranges: Vec<(f32, f32)>,
        counts: Vec<Vec<u64>>,
    },
    /// One Gaussian shared by all dimensions, fitted to the pooled non-zero
    /// values and truncated below at `lower` when set.
    TruncGaussian {
        mean: f64,
        std: f64,
        lower: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDistribution {
    /// Shape of one feature item (batch dimension 1).
    pub shape: Shape,
    pub samples: u64,
    /// Exact zeros seen per dimension.
    pub zero_counts: Vec<u64>,
    pub model: DistributionModel,
}

impl FeatureDistribution {
    pub fn dims(&self) -> usize {
        self.zero_counts.len()
    }

    pub fn zero_fraction(&self, dim: usize) -> f64 {
        self.zero_counts[dim] as f64 / self.samples as f64
    }
}

pub fn fit_distribution(features: &[Tensor<f32>], mode: FitMode) -> Result<FeatureDistribution> {
    let first = features
        .first()
        .ok_or_else(|| Error::Usage("no feature vectors to fit".into()))?;
    if features.len() < 2 {
        return Err(Error::Usage(
            "fitting needs at least 2 feature vectors".into(),
        ));
    }
    let shape = first.shape().with_batch(1);
    if let Some(i) = features.iter().position(|f| f.shape() != shape) {
        return Err(Error::Validation(format!(
            "feature {i} has shape {}, expected {shape}",
            features[i].shape()
        )));
    }
    let dims = shape.len();
    let mut zero_counts = vec![0u64; dims];
    for f in features {
        for (z, &v) in zero_counts.iter_mut().zip(f.data()) {
            if v == 0.0 {
                *z += 1;
            }
        }
    }
    let model = match mode {
        FitMode::Histogram { bins } => {
            if bins == 0 {
                return Err(Error::Usage("histogram needs at least one bin".into()));
            }
            let mut ranges = vec![(f32::INFINITY, f32::NEG_INFINITY); dims];
            for f in features {
                for (r, &v) in ranges.iter_mut().zip(f.data()) {
                    if v != 0.0 {
                        *r = (r.0.min(v), r.1.max(v));
                    }
                }
            }
            for r in ranges.iter_mut() {
                if r.0 > r.1 {
                    *r = (0.0, 0.0);
                }
            }
            let mut counts = vec![vec![0u64; bins]; dims];
            for f in features {
                for (d, &v) in f.data().iter().enumerate() {
                    if v != 0.0 {
                        counts[d][bin_of(v, ranges[d], bins)] += 1;
                    }
                }
            }
            DistributionModel::Histogram { ranges, counts }
        }
        FitMode::TruncGaussian => {
            let values = features
                .iter()
                .flat_map(|f| f.data().iter().copied())
                .filter(|&v| v != 0.0);
            let (mut n, mut sum, mut sq) = (0u64, 0.0f64, 0.0f64);
            let mut all_nonneg = true;
            for v in values {
                let v = v as f64;
                n += 1;
                sum += v;
                sq += v * v;
                all_nonneg &= v >= 0.0;
            }
            let (mean, std) = if n == 0 {
                (0.0, 0.0)
            } else {
                let mean = sum / n as f64;
                (mean, (sq / n as f64 - mean * mean).max(0.0).sqrt())
            };
            DistributionModel::TruncGaussian {
                mean,
                std,
                lower: all_nonneg.then_some(0.0),
            }
        }
    };
    Ok(FeatureDistribution {
        shape,
        samples: features.len() as u64,
        zero_counts,
        model,
    })
}

fn bin_of(v: f32, (lo, hi): (f32, f32), bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = (v as f64 - lo as f64) / (hi as f64 - lo as f64);
    ((t * bins as f64) as usize).min(bins - 1)
}

/// Draws one feature item: each dimension is zero with its empirical zero
/// frequency, otherwise drawn from the fitted model; the result is scaled by
/// `alpha`.
pub fn sample_features(
    dist: &FeatureDistribution,
    alpha: f64,
    rng: &mut Rng,
) -> Result<Tensor<f32>> {
    let dims = dist.dims();
    let mut out = Vec::with_capacity(dims);
    let normal = match dist.model {
        DistributionModel::TruncGaussian { mean, std, .. } => Some(
            Normal::new(mean, std).map_err(|e| Error::Validation(format!("bad gaussian: {e}")))?,
        ),
        _ => None,
    };
    for d in 0..dims {
        let zero: f64 = rng.random();
        if zero < dist.zero_fraction(d) {
            out.push(0.0);
            continue;
        }
        let v = match &dist.model {
            DistributionModel::Histogram { ranges, counts } => {
                let total: u64 = counts[d].iter().sum();
                if total == 0 {
                    0.0
                } else {
                    let mut pick = rng.random_range(0..total);
                    let bin = counts[d]
                        .iter()
                        .position(|&c| {
                            if pick < c {
                                true
                            } else {
                                pick -= c;
                                false
                            }
                        })
                        .unwrap();
                    let (lo, hi) = (ranges[d].0 as f64, ranges[d].1 as f64);
                    let width = (hi - lo) / counts[d].len() as f64;
                    let u: f64 = rng.random();
                    (lo + (bin as f64 + u) * width).clamp(lo, hi)
                }
            }
            DistributionModel::TruncGaussian { mean, lower, .. } => {
                let normal = normal.as_ref().unwrap();
                let mut v = normal.sample(rng);
                if let Some(lo) = *lower {
                    let mut tries = 0;
                    while v < lo && tries < 1000 {
                        v = normal.sample(rng);
                        tries += 1;
                    }
                    if v < lo {
                        v = mean.max(lo);
                    }
                }
                v
            }
        };
        out.push((v * alpha) as f32);
    }
    Tensor::from_vec(dist.shape, out)
}
