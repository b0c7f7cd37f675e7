//! Measurements against the reference implementations, shared by the
//! integration tests and the acceptance harness. Each returns the worst
//! deviation it saw so callers can both assert and report.

use invertkit_core::analysis::{
    binarize, drop_least_then_binarize, dropout_random, fit_distribution, interpolate, keep_top_k,
    norm, sample_features, zero_top_k, DistributionModel, FitMode,
};
use invertkit_core::features::{hog_extract, lbp_extract};
use invertkit_core::ops::{conv2d, conv_output_len, upconv2d, upsample2x_zero_stuff, Padding};
use invertkit_core::rng::seeded;
use invertkit_core::train::{normalized_error, AdamConfig, AdamState};
use invertkit_core::{Shape, Tensor};
use rand::Rng;

use super::{
    brute_force_error, hog_oracle, lbp_oracle, max_abs_diff, naive_conv, random_image,
    random_tensor, ReferenceAdam,
};

/// Largest conv2d − naive difference over random instances, including the
/// 1×2×7×7, K=3, stride-2 case. Each difference is scaled by
/// max(1, Σ|x·w| + |b|), the magnitude that bounds single-precision
/// accumulation error, since sums of up to a hundred products carry absolute
/// rounding above 1e-6 regardless of the order they are added in.
pub fn conv_vs_naive(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = seeded(500 + i);
        let (n, c, o, k, s, h, w) = if i == 0 {
            (1, 2, 3, 3, 2, 7, 7)
        } else {
            (
                rng.random_range(1..=2),
                rng.random_range(1..=4),
                rng.random_range(1..=4),
                rng.random_range(1..=5),
                rng.random_range(1..=3),
                rng.random_range(4..=12),
                rng.random_range(4..=12),
            )
        };
        let x = random_tensor::<f32>(Shape::new(n, c, h, w), &mut rng);
        let wt = random_tensor::<f32>(Shape::new(o, c, k, k), &mut rng);
        let b = random_tensor::<f32>(Shape::vector(1, o), &mut rng);
        let pad = Padding::same(k);
        let y = conv2d(&x, &wt, &b, s, pad).unwrap();
        let oh = conv_output_len(h, k, s, pad.top, pad.bottom).unwrap();
        let ow = conv_output_len(w, k, s, pad.left, pad.right).unwrap();
        let expected = naive_conv(&x, &wt, b.data(), s, (pad.top, pad.left), (oh, ow));
        assert_eq!(y.shape(), expected.shape());
        let abs = |t: &Tensor<f32>| t.map(|v| v.abs());
        let magnitude = naive_conv(
            &abs(&x),
            &abs(&wt),
            abs(&b).data(),
            s,
            (pad.top, pad.left),
            (oh, ow),
        );
        for ((a, b), m) in y.data().iter().zip(expected.data()).zip(magnitude.data()) {
            let d = (*a as f64 - *b as f64).abs() / (*m as f64).max(1.0);
            worst = worst.max(d);
        }
    }
    worst
}

/// Count of up-convolutions that differ in any bit from zero-stuffing
/// followed by a stride-1 same-padded convolution.
pub fn upconv_vs_two_step(instances: u64) -> usize {
    let mut differing = 0;
    for i in 0..instances {
        let mut rng = seeded(700 + i);
        let (n, c, o) = (
            rng.random_range(1..=2),
            rng.random_range(1..=4),
            rng.random_range(1..=4),
        );
        let (h, w, k) = (
            rng.random_range(1..=6),
            rng.random_range(1..=6),
            rng.random_range(2..=5),
        );
        let x = random_tensor::<f32>(Shape::new(n, c, h, w), &mut rng);
        let wt = random_tensor::<f32>(Shape::new(o, c, k, k), &mut rng);
        let b = random_tensor::<f32>(Shape::vector(1, o), &mut rng);
        let y = upconv2d(&x, &wt, &b).unwrap();
        let z = conv2d(&upsample2x_zero_stuff(&x), &wt, &b, 1, Padding::same(k)).unwrap();
        let same = y.shape() == z.shape()
            && y.data()
                .iter()
                .zip(z.data())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        differing += !same as usize;
    }
    differing
}

/// Number of random 32×32 images whose LBP histograms differ from the
/// brute-force counts.
pub fn lbp_vs_oracle(images: u64) -> usize {
    (0..images)
        .filter(|&i| {
            let img = random_image(32, 32, 900 + i);
            let fm = lbp_extract(&img, 16).unwrap();
            fm.tensor.data() != &lbp_oracle(img.data(), 32, 32, 16)[..]
        })
        .count()
}

/// Largest |HOG − oracle| over random images of assorted sizes.
pub fn hog_vs_oracle(images: u64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..images {
        let mut rng = seeded(1100 + i);
        let (w, h) = (rng.random_range(16..=40), rng.random_range(16..=40));
        let img = random_image(w, h, 1200 + i);
        let fm = hog_extract(&img, 8).unwrap();
        worst = worst.max(max_abs_diff(
            fm.tensor.data(),
            &hog_oracle(img.data(), w, h, 8),
        ));
    }
    worst
}

/// Largest parameter difference between the library optimizer and the
/// reference over `steps` steps on random quadratics.
pub fn adam_vs_reference(trajectories: u64, steps: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..trajectories {
        let mut rng = seeded(1300 + i);
        let n = rng.random_range(1..=12);
        let scale: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let grad = |theta: &[f64], rng: &mut invertkit_core::rng::Rng| -> Vec<f64> {
            (0..theta.len())
                .map(|j| 2.0 * scale[j] * (theta[j] - center[j]) + rng.random_range(-0.1..0.1))
                .collect()
        };
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lr = rng.random_range(1e-3..5e-2);
        let mut reference = start.clone();
        let mut opt = ReferenceAdam::new(n, lr);
        let mut tensor = Tensor::<f64>::from_vec(Shape::vector(1, n), start).unwrap();
        let mut state = AdamState::<f64>::new([n]);
        let mut noise_a = seeded(1400 + i);
        let mut noise_b = seeded(1400 + i);
        for _ in 0..steps {
            let g = grad(&reference, &mut noise_a);
            opt.step(&mut reference, &g);
            let g = grad(tensor.data(), &mut noise_b);
            tensor.grad_mut().copy_from_slice(&g);
            state
                .update(
                    [("theta".to_string(), &mut tensor)],
                    lr,
                    &AdamConfig::default(),
                )
                .unwrap();
            let d = tensor
                .data()
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    worst
}

/// Worst relative norm change of the norm-preserving perturbations, the
/// worst binarize idempotence gap, whether top-k always partitions and
/// whether interpolation endpoints are bit-exact, over random vectors.
pub struct PerturbationReport {
    pub norm_ratio_error: f64,
    pub idempotence_gap: f64,
    pub partition_exact: bool,
    pub endpoints_exact: bool,
}

pub fn perturbation_properties(vectors: u64) -> PerturbationReport {
    let mut report = PerturbationReport {
        norm_ratio_error: 0.0,
        idempotence_gap: 0.0,
        partition_exact: true,
        endpoints_exact: true,
    };
    for i in 0..vectors {
        let mut rng = seeded(1500 + i);
        let len = rng.random_range(2..=300);
        let sparsity: f64 = rng.random_range(0.0..0.8);
        let phi: Vec<f32> = (0..len)
            .map(|_| {
                if rng.random_bool(sparsity) {
                    0.0
                } else {
                    rng.random_range(-3.0f32..3.0)
                }
            })
            .collect();
        if phi.iter().filter(|&&v| v != 0.0).count() < 2 {
            continue;
        }
        let n0 = norm(&phi);
        let fraction = rng.random_range(0.0..0.9);
        let outs = [
            binarize(&phi).unwrap(),
            dropout_random(&phi, fraction, &mut rng.clone()).unwrap_or_else(|_| vec![0.0; len]),
            drop_least_then_binarize(&phi, fraction).unwrap(),
        ];
        for (j, out) in outs.iter().enumerate() {
            // Dropout may legitimately remove every non-zero; skip those.
            if j == 1 && out.iter().all(|&v| v == 0.0) {
                continue;
            }
            report.norm_ratio_error = report.norm_ratio_error.max((norm(out) / n0 - 1.0).abs());
        }
        let b = binarize(&phi).unwrap();
        let bb = binarize(&b).unwrap();
        let gap = b
            .iter()
            .zip(&bb)
            .map(|(x, y)| ((x - y) as f64).abs())
            .fold(0.0, f64::max);
        report.idempotence_gap = report.idempotence_gap.max(gap);
        let k = rng.random_range(1..=len);
        let keep = keep_top_k(&phi, k).unwrap();
        let zero = zero_top_k(&phi, k).unwrap();
        report.partition_exact &= keep
            .iter()
            .zip(&zero)
            .zip(&phi)
            .all(|((a, b), p)| (a + b).to_bits() == p.to_bits() && (*a == 0.0 || *b == 0.0));
        let a = Tensor::from_vec(Shape::vector(1, len), phi.clone()).unwrap();
        let z = Tensor::from_vec(
            Shape::vector(1, len),
            (0..len).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
        )
        .unwrap();
        let frames = interpolate(&a, &z, rng.random_range(2..=9)).unwrap();
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        report.endpoints_exact &=
            bits(&frames[0]) == bits(&a) && bits(frames.last().unwrap()) == bits(&z);
    }
    report
}

/// Worst |empirical − fitted| zero fraction over `draws` samples and the
/// count of histogram draws outside the α-scaled observed range.
pub fn sampling_properties(draws: usize, alpha: f64) -> (f64, usize) {
    let mut rng = seeded(1700);
    let dims = 24;
    let zero_p: Vec<f64> = (0..dims)
        .map(|d| d as f64 / (dims - 1) as f64 * 0.9)
        .collect();
    let features: Vec<Tensor<f32>> = (0..400)
        .map(|_| {
            let data = (0..dims)
                .map(|d| {
                    if rng.random_bool(zero_p[d]) {
                        0.0
                    } else {
                        rng.random_range(0.05f32..4.0) * (d as f32 + 1.0)
                    }
                })
                .collect();
            Tensor::from_vec(Shape::vector(1, dims), data).unwrap()
        })
        .collect();
    let dist = fit_distribution(&features, FitMode::Histogram { bins: 64 }).unwrap();
    let DistributionModel::Histogram { ranges, .. } = &dist.model else {
        unreachable!()
    };
    let mut zeros = vec![0usize; dims];
    let mut outside = 0;
    let mut draw_rng = seeded(1701);
    for _ in 0..draws {
        let s = sample_features(&dist, alpha, &mut draw_rng).unwrap();
        for (d, &v) in s.data().iter().enumerate() {
            if v == 0.0 {
                zeros[d] += 1;
                continue;
            }
            let (lo, hi) = (ranges[d].0 as f64 * alpha, ranges[d].1 as f64 * alpha);
            let tol = 1e-5 * hi.abs().max(1.0);
            if (v as f64) < lo - tol || (v as f64) > hi + tol {
                outside += 1;
            }
        }
    }
    let worst = (0..dims)
        .map(|d| (zeros[d] as f64 / draws as f64 - dist.zero_fraction(d)).abs())
        .fold(0.0, f64::max);
    (worst, outside)
}

/// Worst |library − brute force| normalized error over random small test
/// sets, and the score of a perfect predictor.
pub fn metric_properties(sets: u64) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut perfect = 0.0f64;
    for i in 0..sets {
        let mut rng = seeded(1900 + i);
        let n = rng.random_range(2..=9);
        let shape = Shape::new(1, 3, rng.random_range(2..=8), rng.random_range(2..=8));
        let unit = |rng: &mut invertkit_core::rng::Rng| {
            Tensor::<f32>::from_fn(shape, |_| rng.random_range(0.0f32..1.0))
        };
        let targets: Vec<Tensor<f32>> = (0..n).map(|_| unit(&mut rng)).collect();
        let preds: Vec<Tensor<f32>> = (0..n).map(|_| unit(&mut rng)).collect();
        let wide = |v: &[Tensor<f32>]| -> Vec<Vec<f64>> {
            v.iter()
                .map(|t| t.data().iter().map(|&x| x as f64).collect())
                .collect()
        };
        let got = normalized_error(&preds, &targets, i).unwrap().error;
        let expected = brute_force_error(&wide(&preds), &wide(&targets));
        worst = worst.max((got - expected).abs());
        perfect = perfect.max(normalized_error(&targets, &targets, i).unwrap().error);
    }
    (worst, perfect)
}
