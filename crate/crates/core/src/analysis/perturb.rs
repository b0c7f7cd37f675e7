use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::Rng;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    Binarize,
    DropoutRandom { fraction: f64 },
    DropLeastThenBinarize { fraction: f64 },
    KeepTopK { k: usize },
    ZeroTopK { k: usize },
}

impl Perturbation {
    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::Binarize => "binarize",
            Perturbation::DropoutRandom { .. } => "dropout_random",
            Perturbation::DropLeastThenBinarize { .. } => "drop_least_then_binarize",
            Perturbation::KeepTopK { .. } => "keep_top_k",
            Perturbation::ZeroTopK { .. } => "zero_top_k",
        }
    }

    /// Builds a perturbation from its name; `fraction` and `k` are only
    /// accepted by the kinds that use them.
    pub fn parse(kind: &str, fraction: Option<f64>, k: Option<usize>) -> Result<Self> {
        let takes_fraction = matches!(kind, "dropout_random" | "drop_least_then_binarize");
        let takes_k = matches!(kind, "keep_top_k" | "zero_top_k");
        if !takes_fraction && !takes_k && kind != "binarize" {
            return Err(Error::Usage(format!("unknown perturbation {kind:?}")));
        }
        if fraction.is_some() && !takes_fraction {
            return Err(Error::Usage(format!("{kind} does not take a fraction")));
        }
        if k.is_some() && !takes_k {
            return Err(Error::Usage(format!("{kind} does not take k")));
        }
        let fraction = fraction.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Usage(format!("fraction {fraction} outside [0, 1]")));
        }
        let k = k.unwrap_or(5);
        if k == 0 {
            return Err(Error::Usage("k must be positive".into()));
        }
        Ok(match kind {
            "binarize" => Perturbation::Binarize,
            "dropout_random" => Perturbation::DropoutRandom { fraction },
            "drop_least_then_binarize" => Perturbation::DropLeastThenBinarize { fraction },
            "keep_top_k" => Perturbation::KeepTopK { k },
            "zero_top_k" => Perturbation::ZeroTopK { k },
            other => return Err(Error::Usage(format!("unknown perturbation {other:?}"))),
        })
    }

    pub fn apply(&self, phi: &[f32], rng: &mut Rng) -> Result<Vec<f32>> {
        match *self {
            Perturbation::Binarize => binarize(phi),
            Perturbation::DropoutRandom { fraction } => dropout_random(phi, fraction, rng),
            Perturbation::DropLeastThenBinarize { fraction } => {
                drop_least_then_binarize(phi, fraction)
            }
            Perturbation::KeepTopK { k } => keep_top_k(phi, k),
            Perturbation::ZeroTopK { k } => zero_top_k(phi, k),
        }
    }
}

pub fn norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|&x| (x as f64) * (x as f64))
        .sum::<f64>()
        .sqrt()
}

/// Signs kept, every non-zero magnitude set to `target / sqrt(nnz)`.
fn binarize_to(phi: &[f32], target: f64) -> Result<Vec<f32>> {
    let nnz = phi.iter().filter(|&&v| v != 0.0).count();
    if nnz == 0 || !(target > 0.0) {
        return Err(Error::Perturbation(
            "cannot binarize an all-zero vector".into(),
        ));
    }
    let c = (target / (nnz as f64).sqrt()) as f32;
    Ok(phi
        .iter()
        .map(|&v| match v {
            v if v > 0.0 => c,
            v if v < 0.0 => -c,
            _ => 0.0,
        })
        .collect())
}

/// Norm-preserving binarization: `sign(φ) · ‖φ‖ / sqrt(nnz(φ))`.
pub fn binarize(phi: &[f32]) -> Result<Vec<f32>> {
    binarize_to(phi, norm(phi))
}

/// Zeroes `⌊fraction · len⌋` uniformly chosen entries and rescales the rest
/// back to the original norm.
pub fn dropout_random(phi: &[f32], fraction: f64, rng: &mut Rng) -> Result<Vec<f32>> {
    let count = (fraction.clamp(0.0, 1.0) * phi.len() as f64).floor() as usize;
    if count == 0 {
        return Ok(phi.to_vec());
    }
    let mut out = phi.to_vec();
    for i in index::sample(rng, phi.len(), count) {
        out[i] = 0.0;
    }
    let kept = norm(&out);
    if !(kept > 0.0) {
        return Err(Error::Perturbation("every surviving entry is zero".into()));
    }
    let s = norm(phi) / kept;
    Ok(out.iter().map(|&v| (v as f64 * s) as f32).collect())
}

/// Zeroes the `⌊fraction · nnz⌋` smallest-magnitude non-zero entries (lower
/// index first on ties), then binarizes to the original norm.
pub fn drop_least_then_binarize(phi: &[f32], fraction: f64) -> Result<Vec<f32>> {
    let target = norm(phi);
    let mut nonzero: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] != 0.0).collect();
    let count = (fraction.clamp(0.0, 1.0) * nonzero.len() as f64).floor() as usize;
    nonzero.sort_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs()).then(a.cmp(&b)));
    let mut out = phi.to_vec();
    for &i in &nonzero[..count] {
        out[i] = 0.0;
    }
    binarize_to(&out, target)
}

/// Indices of the `k` largest values, lower index first on ties.
fn top_k(phi: &[f32], k: usize) -> Result<Vec<usize>> {
    if k > phi.len() {
        return Err(Error::Validation(format!(
            "k = {k} exceeds length {}",
            phi.len()
        )));
    }
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

pub fn keep_top_k(phi: &[f32], k: usize) -> Result<Vec<f32>> {
    let mut out = alloc::vec![0.0; phi.len()];
    for i in top_k(phi, k)? {
        out[i] = phi[i];
    }
    Ok(out)
}

pub fn zero_top_k(phi: &[f32], k: usize) -> Result<Vec<f32>> {
    let mut out = phi.to_vec();
    for i in top_k(phi, k)? {
        out[i] = 0.0;
    }
    Ok(out)
}
