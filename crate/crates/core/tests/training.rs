//! Scaled-down training behaviour.

mod common;

use common::runs::{
    fixed_encoder_untouched, mode_comparison, overfit_one_image, resume_trajectories,
};
use invertkit_core::train::{BatchSampler, TrainConfig};

#[test]
fn one_image_is_memorized() {
    let losses = overfit_one_image(500);
    let initial = losses[0];
    let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(losses.len(), 500);
    eprintln!(
        "initial {initial:.4e}, best {best:.4e}, last {:.4e}",
        losses.last().unwrap()
    );
    assert!(best < 0.01 * initial);
}

#[test]
fn decoder_training_leaves_the_encoder_alone() {
    assert!(fixed_encoder_untouched(20));
}

#[test]
fn resumed_run_reproduces_the_trajectory_bit_for_bit() {
    let (straight, resumed) = resume_trajectories(40, 17);
    assert_eq!(straight.len(), 40);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&straight), bits(&resumed));
}

#[test]
fn autoencoder_fits_at_least_as_well_as_fixed_encoder() {
    let (fixed, auto) = mode_comparison(300);
    eprintln!("fixed {fixed:.4e}, autoencoder {auto:.4e}");
    assert!(auto <= fixed);
}

#[test]
fn batches_depend_only_on_seed_and_step() {
    let mut a = BatchSampler::new(9, 5, 23);
    let mut b = BatchSampler::new(9, 5, 23);
    let forward: Vec<_> = (0..30).map(|s| a.indices(s)).collect();
    let backward: Vec<_> = (0..30).rev().map(|s| b.indices(s)).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
    let epoch: Vec<usize> = (0..23 * 5).map(|p| forward[p / 5][p % 5]).collect();
    for chunk in epoch.chunks(23) {
        let mut sorted = chunk.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..23).collect::<Vec<_>>());
    }
}

#[test]
fn learning_rate_follows_the_schedule() {
    let c = TrainConfig::new(100, 4, 0);
    assert_eq!(c.lr_at(0), 1e-3);
    assert_eq!(c.lr_at(59), 1e-3);
    assert!((c.lr_at(60) - 3e-4).abs() < 1e-15);
    assert!((c.lr_at(99) - 9e-5).abs() < 1e-15);
}
