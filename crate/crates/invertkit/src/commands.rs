//! Command implementations, each driven by a resolved [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use invertkit_core::analysis::{
    fit_distribution, interpolate, norm, sample_features, FitMode, Perturbation,
};
use invertkit_core::features::Extractor;
use invertkit_core::image::resize_bilinear;
use invertkit_core::network::Network;
use invertkit_core::rng::{self, seeded};
use invertkit_core::train::{
    mean_image, normalized_error, train_classifier, AdamConfig, AdamState, Checkpoint, Mode,
    TrainConfig, Trainer, TrainingData,
};
use invertkit_core::nets::build_toy_encoder;
use invertkit_core::Tensor;
use rayon::prelude::*;

use crate::config::{Command, RunConfig, TrainSection};
use crate::dataset::{list_images, load_dataset, load_images, Dataset};
use crate::error::{Error, Result};
use crate::formats::{
    load_checkpoint, load_distribution, load_feature_map, save_checkpoint, save_distribution,
    save_feature_map, save_keypoints,
};
use crate::imageio::{load_resized, montage, save_png};
use crate::pipeline::{
    build_decoder, check_input, decode_all, targets_for, Extraction,
};
use crate::synth::write_corpus;

pub const CHECKPOINT_FILE: &str = "checkpoint.ivkt";
pub const ENCODER_FILE: &str = "encoder.ivkt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DISTRIBUTION_FILE: &str = "distribution.ivkd";
/// Test images shown in training montages.
const MONTAGE_ROWS: usize = 4;

/// Writes `run.toml` and executes the command.
pub fn execute(run: &RunConfig) -> Result<()> {
    run.write()?;
    match run.command {
        Command::Extract => extract(run),
        Command::Train => train(run).map(|s| {
            println!(
                "trained {} steps in {:.1}s; final loss {:.6}; held-out normalized error {}",
                s.steps,
                s.seconds,
                s.final_loss,
                s.test_error.map_or("n/a".into(), |e| format!("{e:.4}"))
            );
        }),
        Command::TrainEncoder => train_encoder(run),
        Command::Invert => invert(run),
        Command::Evaluate => evaluate(run).map(|e| println!("normalized_error {e}")),
        Command::Perturb => perturb(run),
        Command::Interpolate => interpolate_cmd(run),
        Command::FitDistribution => fit(run),
        Command::Sample => sample(run),
        Command::Synth => synth(run),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn write_row(w: &mut csv::Writer<fs::File>, path: &Path, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| csv_err(path, e))
}

fn flush(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn stem(name: &str) -> String {
    let p = Path::new(name);
    p.with_extension("")
        .to_string_lossy()
        .replace(['/', '\\'], "_")
}

fn size_of(img: &Tensor<f32>) -> (usize, usize) {
    (img.shape().w(), img.shape().h())
}

fn resize_to(img: &Tensor<f32>, (w, h): (usize, usize)) -> Result<Tensor<f32>> {
    if size_of(img) == (w, h) {
        Ok(img.clone())
    } else {
        Ok(resize_bilinear(img, h, w)?)
    }
}

fn extract(run: &RunConfig) -> Result<()> {
    let a = run.analysis();
    let input = a
        .input
        .as_deref()
        .ok_or_else(|| Error::Usage("extract needs an input directory".into()))?;
    let files = list_images(input)?;
    if files.is_empty() {
        return Err(Error::Usage(format!("no images in {}", input.display())));
    }
    let size = run.dataset.as_ref().map(|d| (d.target_size[0], d.target_size[1]));
    let extraction = Extraction::from_config(run.features()?, run.seed)?;
    let results: Vec<Result<_>> = files
        .par_iter()
        .enumerate()
        .map(|(i, (path, _))| {
            let img = load_resized(path, size)?;
            extraction.extract(&img, i as u64)
        })
        .collect();
    let mut ok = 0;
    for ((path, _), result) in files.iter().zip(results) {
        let rel = path.strip_prefix(input).unwrap_or(path).with_extension("");
        match result {
            Ok((fm, kps)) => {
                save_feature_map(&run.out.join(&rel).with_extension("fmap"), &fm)?;
                if let Some(kps) = kps {
                    save_keypoints(&run.out.join(&rel).with_extension("keypoints"), &kps)?;
                }
                ok += 1;
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if ok == 0 {
        return Err(Error::Dataset(format!(
            "none of the {} files in {} could be processed",
            files.len(),
            input.display()
        )));
    }
    println!("wrote features for {ok} of {} images", files.len());
    Ok(())
}

/// Outcome of a training run.
#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub steps: u64,
    pub final_loss: f64,
    pub test_error: Option<f64>,
    pub seconds: f64,
    pub checkpoint: PathBuf,
}

pub fn train_config(section: &TrainSection, seed: u64) -> Result<TrainConfig> {
    Ok(TrainConfig {
        lr: section.lr,
        adam: AdamConfig {
            beta1: section.beta1,
            beta2: section.beta2,
            eps: section.adam_eps,
        },
        batch: section.batch,
        steps: section.steps,
        lr_decay: section.lr_decay.clone(),
        mode: Mode::from_name(&section.mode)?,
        seed,
        divergence_factor: section.divergence_factor,
    })
}

/// Checkpoint metadata: the run configuration without the output directory
/// or resume source, so a resumed run and a straight run match byte for byte.
fn checkpoint_meta(run: &RunConfig) -> String {
    let mut meta = run.clone();
    meta.out = PathBuf::from(".");
    if let Some(t) = meta.train.as_mut() {
        t.resume = None;
    }
    meta.to_toml()
}

pub fn train(run: &RunConfig) -> Result<TrainSummary> {
    let start = Instant::now();
    let section = run
        .train
        .as_ref()
        .ok_or_else(|| Error::Usage("no training section".into()))?;
    let config = train_config(section, run.seed)?;
    let ds_cfg = run.dataset()?;
    let size = (ds_cfg.target_size[0], ds_cfg.target_size[1]);
    let dataset = load_dataset(&ds_cfg.image_dir, size)?;
    let (train_set, test_set) = dataset.split(ds_cfg.split, run.seed)?;
    let extraction = Extraction::from_config(run.features()?, run.seed)?;
    if extraction.kind != Extractor::EncoderLayer && !ds_cfg.grayscale_features {
        return Err(Error::Config(
            "shallow extractors operate on grayscale images".into(),
        ));
    }
    let divisor = run.network.as_ref().map_or(1, |n| n.width_divisor);

    let (encoder, train_inputs, test_inputs) = match config.mode {
        Mode::FixedEncoder => (
            None,
            extraction.network_inputs(&train_set.images)?,
            extraction.network_inputs(&test_set.images)?,
        ),
        Mode::Autoencoder => {
            let enc = extraction.encoder.clone().ok_or_else(|| {
                Error::Usage("autoencoder mode needs encoder_layer features".into())
            })?;
            let view = |set: &Dataset| -> Result<Vec<Tensor<f32>>> {
                set.images.iter().map(|i| extraction.encoder_view(i)).collect()
            };
            (Some(enc), view(&train_set)?, view(&test_set)?)
        }
    };
    let feature_shape = match &encoder {
        Some(e) => e.spec().output_shape(),
        None => {
            let s = train_inputs[0].shape();
            (s.c(), s.h(), s.w())
        }
    };
    let spec = build_decoder(extraction.kind, feature_shape, size, divisor)?;
    let targets = targets_for(&spec, &train_set.images)?;
    let data = TrainingData::new(train_inputs, targets)?;

    let mut trainer = match &section.resume {
        Some(path) => Trainer::from_checkpoint(config.clone(), load_checkpoint(path)?)?,
        None => {
            let decoder = Network::init(spec, &mut seeded(run.seed));
            Trainer::new(config.clone(), encoder, decoder)?
        }
    };
    fs::create_dir_all(&run.out).map_err(|e| Error::io(&run.out, e))?;
    let metrics_path = run.out.join(METRICS_FILE);
    let mut metrics = csv_writer(&metrics_path)?;
    write_row(
        &mut metrics,
        &metrics_path,
        &["step", "loss", "lr", "normalized_error"].map(String::from),
    )?;
    for (i, loss) in trainer.losses.iter().enumerate() {
        let row = [i.to_string(), loss.to_string(), config.lr_at(i as u64).to_string(), String::new()];
        write_row(&mut metrics, &metrics_path, &row)?;
    }

    let evaluate_now = |trainer: &Trainer, step: u64| -> Result<Option<f64>> {
        if test_set.len() < 2 {
            return Ok(None);
        }
        let preds = decode_all(trainer.encoder.as_ref(), &trainer.decoder, &test_inputs)?;
        let err = normalized_error(&preds, &test_set.images, run.seed)?.error;
        let rows: Vec<Vec<Tensor<f32>>> = test_set
            .images
            .iter()
            .zip(&preds)
            .take(MONTAGE_ROWS)
            .map(|(img, p)| Ok(vec![img.clone(), resize_to(p, size_of(img))?]))
            .collect::<Result<_>>()?;
        save_png(&run.out.join(format!("montage_{step:06}.png")), &montage(&rows))?;
        Ok(Some(err))
    };

    let every = section.montage_every;
    let mut last_error = None;
    let result = (|| -> Result<()> {
        while trainer.step < config.steps {
            let step = trainer.step;
            let loss = trainer.step(&data)?;
            let done = trainer.step == config.steps;
            let eval = if done || (every > 0 && trainer.step % every == 0) {
                evaluate_now(&trainer, trainer.step)?
            } else {
                None
            };
            if eval.is_some() {
                last_error = eval;
            }
            let row = [
                step.to_string(),
                loss.to_string(),
                config.lr_at(step).to_string(),
                eval.map_or(String::new(), |e| e.to_string()),
            ];
            write_row(&mut metrics, &metrics_path, &row)?;
        }
        Ok(())
    })();
    flush(metrics, &metrics_path)?;
    let checkpoint = run.out.join(CHECKPOINT_FILE);
    save_checkpoint(&checkpoint, &trainer.checkpoint(checkpoint_meta(run), data.len()))?;
    result?;
    Ok(TrainSummary {
        steps: trainer.step,
        final_loss: trainer.losses.last().copied().unwrap_or(f64::NAN),
        test_error: last_error,
        seconds: start.elapsed().as_secs_f64(),
        checkpoint,
    })
}

fn train_encoder(run: &RunConfig) -> Result<()> {
    let section = run
        .train
        .as_ref()
        .ok_or_else(|| Error::Usage("no training section".into()))?;
    let config = train_config(section, run.seed)?;
    let ds_cfg = run.dataset()?;
    let side = section.encoder_input.unwrap_or(64);
    let dataset = load_dataset(&ds_cfg.image_dir, (side, side))?;
    if dataset.classes.len() < 2 {
        return Err(Error::Dataset(
            "encoder training needs one subdirectory per class, at least 2".into(),
        ));
    }
    let spec = build_toy_encoder((3, side, side), dataset.classes.len())?.network;
    let mut net = Network::init(spec, &mut seeded(run.seed));
    let losses = train_classifier(&mut net, &dataset.images, &dataset.labels, &config)?;
    let correct = dataset
        .images
        .iter()
        .zip(&dataset.labels)
        .filter(|(img, &label)| {
            let scores = net.predict(img).expect("encoder forward");
            let best = scores
                .data()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i);
            best == Some(label)
        })
        .count();
    let cp = Checkpoint {
        meta: checkpoint_meta(run),
        encoder: None,
        decoder: net,
        adam: AdamState {
            step: config.steps,
            m: Vec::new(),
            v: Vec::new(),
        },
        step: config.steps,
        rng_state: rng::save_state(&seeded(run.seed)),
        losses: losses.clone(),
    };
    save_checkpoint(&run.out.join(ENCODER_FILE), &cp)?;
    println!(
        "encoder: {} classes, final loss {:.4}, training accuracy {:.3}",
        dataset.classes.len(),
        losses.last().copied().unwrap_or(f64::NAN),
        correct as f64 / dataset.len() as f64
    );
    Ok(())
}

/// A trained decoder together with the feature pipeline it was trained on.
pub struct Model {
    pub run: RunConfig,
    pub extraction: Extraction,
    pub decoder: Network<f32>,
}

impl Model {
    pub fn load(path: &Path) -> Result<Model> {
        let cp = load_checkpoint(path)?;
        let run = RunConfig::from_toml(&cp.meta)
            .map_err(|e| Error::Config(format!("{}: bad metadata: {e}", path.display())))?;
        let mut extraction = Extraction::from_config(run.features()?, run.seed)?;
        // A jointly trained encoder replaces the one named in the features.
        if let Some(trained) = cp.encoder {
            extraction.encoder = Some(trained);
        }
        Ok(Model {
            run,
            extraction,
            decoder: cp.decoder,
        })
    }

    /// (width, height) images are brought to before feature extraction.
    pub fn target_size(&self) -> (usize, usize) {
        let t = self.run.dataset.as_ref().map_or([64, 64], |d| d.target_size);
        (t[0], t[1])
    }

    pub fn features(&self, images: &[Tensor<f32>]) -> Result<Vec<Tensor<f32>>> {
        let feats = self.extraction.network_inputs(images)?;
        for f in &feats {
            check_input(self.decoder.spec(), f)?;
        }
        Ok(feats)
    }

    pub fn decode(&self, features: &[Tensor<f32>]) -> Result<Vec<Tensor<f32>>> {
        decode_all(None, &self.decoder, features)
    }

    /// Images for analysis: `dir` (or the training dataset) restricted to
    /// the held-out split, the training split, or everything.
    pub fn images(&self, dir: Option<&Path>, which: &str) -> Result<Dataset> {
        let ds_cfg = self.run.dataset()?;
        let dir = dir.unwrap_or(&ds_cfg.image_dir);
        match which {
            "all" => {
                let ds = load_images(dir, Some(self.target_size()))?;
                if ds.is_empty() {
                    return Err(Error::Usage(format!("no images in {}", dir.display())));
                }
                Ok(ds)
            }
            "test" | "train" => {
                let ds = load_dataset(dir, self.target_size())?;
                let (train, test) = ds.split(ds_cfg.split, self.run.seed)?;
                Ok(if which == "test" { test } else { train })
            }
            other => Err(Error::Usage(format!(
                "image selection must be test, train or all, not {other:?}"
            ))),
        }
    }
}

fn invert(run: &RunConfig) -> Result<()> {
    let model = Model::load(run.checkpoint()?)?;
    let a = run.analysis();
    let input = a
        .input
        .as_deref()
        .ok_or_else(|| Error::Usage("invert needs an input directory".into()))?;
    let mut fmaps: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "fmap"))
        .collect();
    fmaps.sort();
    let (names, originals, features) = if !fmaps.is_empty() {
        let feats = fmaps
            .iter()
            .map(|p| Ok(load_feature_map(p)?.network_input()))
            .collect::<Result<Vec<_>>>()?;
        for f in &feats {
            check_input(model.decoder.spec(), f)?;
        }
        let names: Vec<String> = fmaps
            .iter()
            .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
            .collect();
        (names, None, feats)
    } else {
        let ds = model.images(Some(input), "all")?;
        let feats = model.features(&ds.images)?;
        (ds.names.iter().map(|n| stem(n)).collect(), Some(ds.images), feats)
    };
    let recon = model.decode(&features)?;
    let mut rows = Vec::new();
    for (i, (name, r)) in names.iter().zip(&recon).enumerate() {
        save_png(&run.out.join(format!("{name}.png")), r)?;
        rows.push(match &originals {
            Some(imgs) => vec![imgs[i].clone(), resize_to(r, size_of(&imgs[i]))?],
            None => vec![r.clone()],
        });
    }
    save_png(&run.out.join("montage.png"), &montage(&rows))?;
    println!("inverted {} inputs", recon.len());
    Ok(())
}

/// Normalized error of a model or baseline over the selected images.
pub fn evaluate(run: &RunConfig) -> Result<f64> {
    let a = run.analysis();
    let which = a.images.as_deref().unwrap_or("test");
    let (names, targets, preds) = match a.baseline.as_deref() {
        Some(baseline) => {
            let ds_cfg = run.dataset()?;
            let size = (ds_cfg.target_size[0], ds_cfg.target_size[1]);
            let ds = match which {
                "all" => load_images(&ds_cfg.image_dir, Some(size))?,
                _ => {
                    let (train, test) =
                        load_dataset(&ds_cfg.image_dir, size)?.split(ds_cfg.split, run.seed)?;
                    if which == "train" {
                        train
                    } else {
                        test
                    }
                }
            };
            let preds = match baseline {
                "identity" => ds.images.clone(),
                "mean" => vec![mean_image(&ds.images)?; ds.len()],
                other => {
                    return Err(Error::Usage(format!(
                        "baseline must be identity or mean, not {other:?}"
                    )))
                }
            };
            (ds.names, ds.images, preds)
        }
        None => {
            let model = Model::load(run.checkpoint()?)?;
            let dir = run.dataset.as_ref().map(|d| d.image_dir.clone());
            let ds = model.images(dir.as_deref(), which)?;
            let preds = model.decode(&model.features(&ds.images)?)?;
            (ds.names, ds.images, preds)
        }
    };
    let report = normalized_error(&preds, &targets, run.seed)?;
    let path = run.out.join("errors.csv");
    let mut w = csv_writer(&path)?;
    write_row(&mut w, &path, &["image", "error"].map(String::from))?;
    for (n, e) in names.iter().zip(&report.per_image) {
        write_row(&mut w, &path, &[n.clone(), e.to_string()])?;
    }
    flush(w, &path)?;
    let summary = run.out.join("normalized_error.txt");
    fs::write(&summary, format!("{}\n", report.error)).map_err(|e| Error::io(&summary, e))?;
    Ok(report.error)
}

fn perturb(run: &RunConfig) -> Result<()> {
    let model = Model::load(run.checkpoint()?)?;
    let a = run.analysis();
    let kind = a.kind.as_deref().unwrap_or("binarize");
    let perturbation = Perturbation::parse(kind, a.fraction, a.k)?;
    let ds = model.images(a.input.as_deref(), a.images.as_deref().unwrap_or("test"))?;
    let ds = match a.count {
        Some(n) => ds.subset(&(0..n.min(ds.len())).collect::<Vec<_>>()),
        None => ds,
    };
    let clean = model.features(&ds.images)?;
    let mut rng = seeded(run.seed);
    let mut perturbed = Vec::with_capacity(clean.len());
    let mut ratios = Vec::with_capacity(clean.len());
    for phi in &clean {
        let out = perturbation.apply(phi.data(), &mut rng)?;
        ratios.push(norm(&out) / norm(phi.data()));
        perturbed.push(Tensor::from_vec(phi.shape(), out)?);
    }
    let clean_img = model.decode(&clean)?;
    let pert_img = model.decode(&perturbed)?;
    let err_clean = normalized_error(&clean_img, &ds.images, run.seed)?;
    let err_pert = normalized_error(&pert_img, &ds.images, run.seed)?;
    let path = run.out.join("perturb.csv");
    let mut w = csv_writer(&path)?;
    write_row(
        &mut w,
        &path,
        &["image", "kind", "norm_ratio", "error_clean", "error_perturbed"].map(String::from),
    )?;
    let mut rows = Vec::new();
    for i in 0..ds.len() {
        let row = [
            ds.names[i].clone(),
            perturbation.name().to_string(),
            ratios[i].to_string(),
            err_clean.per_image[i].to_string(),
            err_pert.per_image[i].to_string(),
        ];
        write_row(&mut w, &path, &row)?;
        let size = size_of(&ds.images[i]);
        rows.push(vec![
            ds.images[i].clone(),
            resize_to(&clean_img[i], size)?,
            resize_to(&pert_img[i], size)?,
        ]);
    }
    flush(w, &path)?;
    save_png(&run.out.join(format!("{}.png", perturbation.name())), &montage(&rows))?;
    println!(
        "{}: normalized error {:.4} clean, {:.4} perturbed",
        perturbation.name(),
        err_clean.error,
        err_pert.error
    );
    Ok(())
}

fn interpolate_cmd(run: &RunConfig) -> Result<()> {
    let model = Model::load(run.checkpoint()?)?;
    let a = run.analysis();
    let steps = a.steps.unwrap_or(6);
    let (pa, pb) = match (&a.image_a, &a.image_b) {
        (Some(x), Some(y)) => (PathBuf::from(x), PathBuf::from(y)),
        _ => return Err(Error::Usage("interpolate needs two images".into())),
    };
    let size = model.target_size();
    let images = vec![load_resized(&pa, Some(size))?, load_resized(&pb, Some(size))?];
    let feats = model.features(&images)?;
    let frames = interpolate(&feats[0], &feats[1], steps)?;
    let decoded = model.decode(&frames)?;
    let path = run.out.join("frames.csv");
    let mut w = csv_writer(&path)?;
    write_row(&mut w, &path, &["frame", "lambda"].map(String::from))?;
    for (i, img) in decoded.iter().enumerate() {
        save_png(&run.out.join(format!("frame_{i:02}.png")), img)?;
        let lambda = i as f64 / (steps - 1) as f64;
        write_row(&mut w, &path, &[i.to_string(), lambda.to_string()])?;
    }
    flush(w, &path)?;
    save_png(&run.out.join("strip.png"), &montage(&[decoded.clone()]))?;
    println!("wrote {} frames", decoded.len());
    Ok(())
}

fn fit(run: &RunConfig) -> Result<()> {
    let model = Model::load(run.checkpoint()?)?;
    let a = run.analysis();
    let ds = model.images(a.input.as_deref(), a.images.as_deref().unwrap_or("train"))?;
    let feats = model.features(&ds.images)?;
    let mode = match a.fit_mode.as_deref().unwrap_or("histogram") {
        "histogram" => FitMode::Histogram {
            bins: a.bins.unwrap_or(64),
        },
        "gaussian" | "trunc_gaussian" => FitMode::TruncGaussian,
        other => {
            return Err(Error::Usage(format!(
                "fit mode must be histogram or gaussian, not {other:?}"
            )))
        }
    };
    let dist = fit_distribution(&feats, mode)?;
    save_distribution(&run.out.join(DISTRIBUTION_FILE), &dist)?;
    println!("fitted {} dimensions over {} feature vectors", dist.dims(), dist.samples);
    Ok(())
}

fn sample(run: &RunConfig) -> Result<()> {
    let model = Model::load(run.checkpoint()?)?;
    let a = run.analysis();
    let path = a
        .distribution
        .as_deref()
        .ok_or_else(|| Error::Usage("sample needs a fitted distribution".into()))?;
    let dist = load_distribution(path)?;
    let alpha = a.alpha.unwrap_or(1.0);
    let count = a.count.unwrap_or(8);
    let mut rng = seeded(run.seed);
    let feats = (0..count)
        .map(|_| Ok(sample_features(&dist, alpha, &mut rng)?))
        .collect::<Result<Vec<_>>>()?;
    for f in &feats {
        check_input(model.decoder.spec(), f)?;
    }
    let images = model.decode(&feats)?;
    let csv_path = run.out.join("samples.csv");
    let mut w = csv_writer(&csv_path)?;
    write_row(&mut w, &csv_path, &["sample", "alpha", "norm"].map(String::from))?;
    for (i, (img, f)) in images.iter().zip(&feats).enumerate() {
        save_png(&run.out.join(format!("sample_{i:02}.png")), img)?;
        write_row(
            &mut w,
            &csv_path,
            &[i.to_string(), alpha.to_string(), norm(f.data()).to_string()],
        )?;
    }
    flush(w, &csv_path)?;
    save_png(&run.out.join("samples.png"), &montage(&[images.clone()]))?;
    println!("wrote {count} samples");
    Ok(())
}

fn synth(run: &RunConfig) -> Result<()> {
    let a = run.analysis();
    let per_class = a.count.unwrap_or(32);
    let size = run.dataset.as_ref().map_or(64, |d| d.target_size[0]);
    let n = write_corpus(&run.out, per_class, size, run.seed)?;
    println!("wrote {n} images to {}", run.out.display());
    Ok(())
}
