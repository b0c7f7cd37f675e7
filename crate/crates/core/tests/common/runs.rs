//! Small training runs shared by the training tests and the acceptance
//! harness.

use invertkit_core::features::{hog_extract, to_grayscale};
use invertkit_core::image::center;
use invertkit_core::nets::{build_toy_encoder, conv_inversion_net, hog_net};
use invertkit_core::network::Network;
use invertkit_core::ops::mse_loss;
use invertkit_core::rng::seeded;
use invertkit_core::train::{encode_all, Mode, TrainConfig, Trainer, TrainingData};
use invertkit_core::{Shape, Tensor};
use rand::Rng;

/// Colour images in [0, 1]: a random background, a rectangle and a disc.
pub fn toy_images(n: usize, size: usize, seed: u64) -> Vec<Tensor<f32>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let colour = |rng: &mut invertkit_core::rng::Rng| -> [f32; 3] {
                [rng.random(), rng.random(), rng.random()]
            };
            let (bg, fg, disc) = (colour(&mut rng), colour(&mut rng), colour(&mut rng));
            let s = size as f32;
            let (x0, y0) = (
                rng.random_range(0.0..0.5) * s,
                rng.random_range(0.0..0.5) * s,
            );
            let (x1, y1) = (
                x0 + rng.random_range(0.2..0.5) * s,
                y0 + rng.random_range(0.2..0.5) * s,
            );
            let (cx, cy) = (
                rng.random_range(0.2..0.8) * s,
                rng.random_range(0.2..0.8) * s,
            );
            let r = rng.random_range(0.1..0.3) * s;
            Tensor::from_fn(Shape::new(1, 3, size, size), |[_, c, y, x]| {
                let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
                if (px - cx).powi(2) + (py - cy).powi(2) < r * r {
                    disc[c]
                } else if px >= x0 && px < x1 && py >= y0 && py < y1 {
                    fg[c]
                } else {
                    bg[c]
                }
            })
        })
        .collect()
}

fn hog_input(image: &Tensor<f32>) -> Tensor<f32> {
    hog_extract(&to_grayscale(image).unwrap(), 8)
        .unwrap()
        .network_input()
}

/// Trains a 1/4-width HOG network on the features of one 64×64 image at a
/// constant learning rate and returns the per-step losses.
pub fn overfit_one_image(steps: u64) -> Vec<f64> {
    let image = toy_images(1, 64, 41).remove(0);
    let data = TrainingData::new(vec![hog_input(&image)], vec![center(&image)]).unwrap();
    let net = Network::init(hog_net((8, 8), 4).unwrap(), &mut seeded(42));
    let mut config = TrainConfig::new(steps, 1, 43);
    config.lr_decay.clear();
    config.lr = 3e-3;
    let mut trainer = Trainer::new(config, None, net).unwrap();
    trainer.run(&data, |_| Ok(())).unwrap();
    trainer.losses
}

fn hog_trainer(steps: u64) -> (Trainer, TrainingData) {
    let images = toy_images(12, 64, 51);
    let data = TrainingData::new(
        images.iter().map(hog_input).collect(),
        images.iter().map(center).collect(),
    )
    .unwrap();
    let net = Network::init(hog_net((8, 8), 8).unwrap(), &mut seeded(52));
    let trainer = Trainer::new(TrainConfig::new(steps, 4, 53), None, net).unwrap();
    (trainer, data)
}

/// Loss histories of an uninterrupted run and of a run stopped at `split`,
/// checkpointed, rebuilt from the checkpoint and continued.
pub fn resume_trajectories(total: u64, split: u64) -> (Vec<f64>, Vec<f64>) {
    let (mut straight, data) = hog_trainer(total);
    straight.run(&data, |_| Ok(())).unwrap();

    let (mut first, _) = hog_trainer(total);
    while first.step < split {
        first.step(&data).unwrap();
    }
    let cp = first.checkpoint(String::from("run=resume"), data.len());
    let mut resumed = Trainer::from_checkpoint(first.config.clone(), cp).unwrap();
    resumed.run(&data, |_| Ok(())).unwrap();
    (straight.losses, resumed.losses)
}

/// Whether decoder-only training leaves the encoder producing bit-identical
/// features, checked on the toy encoder (up to conv5) feeding a small decoder.
pub fn fixed_encoder_untouched(steps: u64) -> bool {
    let (encoder, images) = mode_setup();
    let before = encode_all(&encoder, &images, 4).unwrap();
    let decoder = mode_decoder(&encoder);
    let data = TrainingData::new(before.clone(), images.iter().map(center).collect()).unwrap();
    let mut trainer = Trainer::new(TrainConfig::new(steps, 4, 63), None, decoder).unwrap();
    trainer.run(&data, |_| Ok(())).unwrap();
    let after = encode_all(&encoder, &images, 4).unwrap();
    let bits = |v: &[Tensor<f32>]| -> Vec<u32> {
        v.iter()
            .flat_map(|t| t.data().iter().map(|x| x.to_bits()))
            .collect()
    };
    bits(&before) == bits(&after)
}

fn mode_setup() -> (Network<f32>, Vec<Tensor<f32>>) {
    let spec = build_toy_encoder((3, 32, 32), 4)
        .unwrap()
        .up_to("conv5")
        .unwrap();
    (Network::init(spec, &mut seeded(61)), toy_images(16, 32, 60))
}

fn mode_decoder(encoder: &Network<f32>) -> Network<f32> {
    let spec = conv_inversion_net(encoder.spec().output_shape(), 32, 4).unwrap();
    Network::init(spec, &mut seeded(62))
}

/// Final mean training-set loss of the fixed-encoder and autoencoder runs
/// under the same seed and configuration, as (fixed, autoencoder).
pub fn mode_comparison(steps: u64) -> (f64, f64) {
    let (encoder, images) = mode_setup();
    let targets: Vec<Tensor<f32>> = images.iter().map(center).collect();
    let config = TrainConfig::new(steps, 4, 63);
    let mean_loss = |preds: Vec<Tensor<f32>>| -> f64 {
        preds
            .iter()
            .zip(&targets)
            .map(|(p, t)| mse_loss(p, t).unwrap())
            .sum::<f64>()
            / targets.len() as f64
    };

    let features = encode_all(&encoder, &images, 4).unwrap();
    let data = TrainingData::new(features.clone(), targets.clone()).unwrap();
    let mut fixed = Trainer::new(config.clone(), None, mode_decoder(&encoder)).unwrap();
    fixed.run(&data, |_| Ok(())).unwrap();
    let fixed_loss = mean_loss(fixed.predict(&features, 4).unwrap());

    let data = TrainingData::new(images.clone(), targets.clone()).unwrap();
    let mut auto_config = config;
    auto_config.mode = Mode::Autoencoder;
    let decoder = mode_decoder(&encoder);
    let mut auto = Trainer::new(auto_config, Some(encoder), decoder).unwrap();
    auto.run(&data, |_| Ok(())).unwrap();
    let auto_loss = mean_loss(auto.predict(&images, 4).unwrap());
    (fixed_loss, auto_loss)
}
