//! Normalized reconstruction error against a brute-force reference.

mod common;

use common::brute_force_error;
use common::checks::metric_properties;
use invertkit_core::rng::seeded;
use invertkit_core::train::{mean_image, normalized_error, pairwise_normalizer};
use invertkit_core::{Shape, Tensor};
use rand::Rng;

fn wide(v: &[Tensor<f32>]) -> Vec<Vec<f64>> {
    v.iter()
        .map(|t| t.data().iter().map(|&x| x as f64).collect())
        .collect()
}

#[test]
fn matches_brute_force_and_perfect_scores_zero() {
    let (worst, perfect) = metric_properties(60);
    assert!(worst <= 1e-6, "difference {worst:e}");
    assert_eq!(perfect, 0.0);
}

#[test]
fn mean_image_baseline_matches_reference_and_sits_below_one() {
    let mut rng = seeded(77);
    let targets: Vec<Tensor<f32>> = (0..40)
        .map(|_| Tensor::from_fn(Shape::new(1, 3, 8, 8), |_| rng.random_range(0.0f32..1.0)))
        .collect();
    let mean = mean_image(&targets).unwrap();
    let preds = vec![mean; targets.len()];
    let got = normalized_error(&preds, &targets, 0).unwrap().error;
    let expected = brute_force_error(&wide(&preds), &wide(&targets));
    assert!((got - expected).abs() <= 1e-6);
    assert!(got < 1.0, "mean baseline {got}");
}

#[test]
fn large_sets_sample_pairs_close_to_exact() {
    let mut rng = seeded(78);
    let targets: Vec<Tensor<f32>> = (0..600)
        .map(|_| Tensor::from_fn(Shape::new(1, 1, 4, 4), |_| rng.random_range(0.0f32..1.0)))
        .collect();
    let sampled = pairwise_normalizer(&targets, 3).unwrap();
    let exact = {
        let w = wide(&targets);
        let mut sum = 0.0;
        for i in 0..w.len() {
            for j in 0..i {
                sum += w[i]
                    .iter()
                    .zip(&w[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
            }
        }
        sum / (w.len() * (w.len() - 1) / 2) as f64
    };
    assert!((sampled / exact - 1.0).abs() < 0.01);
    assert_eq!(sampled, pairwise_normalizer(&targets, 3).unwrap());
}

#[test]
fn predictions_are_resized_to_the_target() {
    let targets: Vec<Tensor<f32>> = (0..3)
        .map(|i| Tensor::full(Shape::new(1, 3, 8, 8), i as f32 * 0.3))
        .collect();
    let preds: Vec<Tensor<f32>> = (0..3)
        .map(|i| Tensor::full(Shape::new(1, 3, 4, 4), i as f32 * 0.3))
        .collect();
    let r = normalized_error(&preds, &targets, 0).unwrap();
    assert!(r.error < 1e-6);
}

#[test]
fn degenerate_sets_are_rejected() {
    let one = vec![Tensor::<f32>::zeros(Shape::new(1, 3, 4, 4))];
    assert!(normalized_error(&one, &one, 0).is_err());
    let same = vec![Tensor::<f32>::zeros(Shape::new(1, 3, 4, 4)); 3];
    assert!(normalized_error(&same, &same, 0).is_err());
}
