//! Command-line front end: flags are resolved into a [`RunConfig`] which is
//! then executed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use invertkit_core::train::TrainConfig;

use crate::commands::execute;
use crate::config::{
    AnalysisConfig, Command, DatasetConfig, FeatureConfig, NetworkConfig, RunConfig, TrainSection,
};
use crate::error::{Error, Result};
use crate::pipeline::{default_cell, parse_kind};

#[derive(Debug, Parser)]
#[command(name = "invertkit", version, about = "Train and analyse feature inversion networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Write a procedural image corpus (one subdirectory per class).
    Synth(SynthArgs),
    /// Compute feature files for every image in a directory.
    Extract(ExtractArgs),
    /// Train an inversion network.
    Train(TrainArgs),
    /// Train the small classifier whose layers serve as learned features.
    TrainEncoder(EncoderArgs),
    /// Reconstruct images from images or feature files.
    Invert(InvertArgs),
    /// Normalized reconstruction error of a model or a baseline.
    Evaluate(EvaluateArgs),
    /// Reconstruct from perturbed features.
    Perturb(PerturbArgs),
    /// Decode a linear path between the features of two images.
    Interpolate(InterpolateArgs),
    /// Fit a per-dimension feature distribution.
    FitDistribution(FitArgs),
    /// Decode random feature vectors drawn from a fitted distribution.
    Sample(SampleArgs),
    /// Repeat a run from its run.toml.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// hog, lbp, sift or encoder_layer.
    #[arg(long, default_value = "hog")]
    pub features: String,
    /// Cell size (HOG, LBP) or grid spacing (SIFT); defaults per extractor.
    #[arg(long)]
    pub cell: Option<usize>,
    /// Encoder checkpoint for encoder_layer features.
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    /// Encoder layer to invert (conv1..fc8).
    #[arg(long)]
    pub tap: Option<String>,
}

impl FeatureArgs {
    fn resolve(&self) -> Result<FeatureConfig> {
        let kind = parse_kind(&self.features)?;
        Ok(FeatureConfig {
            kind: kind.name().to_string(),
            cell: self.cell.unwrap_or(default_cell(kind)),
            encoder: self.encoder.clone(),
            tap: self.tap.clone(),
        })
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 32)]
    pub per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Directory of images.
    #[arg(long)]
    pub input: PathBuf,
    /// Resize images to WxH before extraction.
    #[arg(long, value_parser = parse_size)]
    pub size: Option<[usize; 2]>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Image directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Image size as WxH.
    #[arg(long, value_parser = parse_size, default_value = "64x64")]
    pub size: [usize; 2],
    /// Fraction of images used for training.
    #[arg(long, default_value_t = 0.9)]
    pub split: f64,
    #[arg(long, default_value_t = 5000)]
    pub steps: u64,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Learning-rate decay as step:factor pairs; defaults to x0.3 at 60% and 85%.
    #[arg(long, value_delimiter = ',', value_parser = parse_decay)]
    pub decay: Option<Vec<(u64, f64)>>,
    /// Divide every layer width by this.
    #[arg(long, default_value_t = 1)]
    pub width_divisor: usize,
    /// fixed_encoder or autoencoder.
    #[arg(long, default_value = "fixed_encoder")]
    pub mode: String,
    #[arg(long, default_value_t = 1e3)]
    pub divergence_factor: f64,
    /// Steps between montages and held-out evaluations (0: only at the end).
    #[arg(long, default_value_t = 500)]
    pub montage_every: u64,
    /// Continue from a checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Image directory with one subdirectory per class.
    #[arg(long)]
    pub data: PathBuf,
    /// Square input side of the encoder.
    #[arg(long, default_value_t = 64)]
    pub input_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: u64,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained inversion checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory of images or .fmap feature files.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained inversion checkpoint (omit with --baseline).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// identity or mean.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Image directory; defaults to the one the model was trained on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_size, default_value = "64x64")]
    pub size: [usize; 2],
    #[arg(long, default_value_t = 0.9)]
    pub split: f64,
    /// test (held-out split), train or all.
    #[arg(long, default_value = "test")]
    pub images: String,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// binarize, dropout_random, drop_least_then_binarize, keep_top_k or zero_top_k.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Image directory; defaults to the training directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub images: String,
    /// Use at most this many images.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// histogram or gaussian.
    #[arg(long, default_value = "histogram")]
    pub mode: String,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    pub images: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub distribution: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Fraction of each dimension's empirical zero probability kept.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override the output directory recorded in the file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_size(s: &str) -> std::result::Result<[usize; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).unwrap_or((s, s));
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("bad size {s:?}, expected WxH"))
    };
    Ok([parse(w)?, parse(h)?])
}

fn parse_decay(s: &str) -> std::result::Result<(u64, f64), String> {
    let (step, factor) = s
        .split_once(':')
        .ok_or_else(|| format!("bad decay {s:?}, expected step:factor"))?;
    Ok((
        step.trim().parse().map_err(|e| format!("{s:?}: {e}"))?,
        factor.trim().parse().map_err(|e| format!("{s:?}: {e}"))?,
    ))
}

fn model_run(command: Command, m: &ModelArgs, analysis: AnalysisConfig) -> RunConfig {
    let mut run = RunConfig::new(command, m.common.seed, m.common.out.clone());
    run.checkpoint = Some(m.checkpoint.clone());
    run.analysis = Some(analysis);
    run
}

/// Turns parsed flags into the run they describe.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    Ok(match cli.command {
        Sub::Synth(a) => {
            let mut run = RunConfig::new(Command::Synth, a.common.seed, a.common.out);
            run.dataset = Some(DatasetConfig {
                image_dir: run.out.clone(),
                target_size: [a.size, a.size],
                split: 1.0,
                grayscale_features: false,
            });
            run.analysis = Some(AnalysisConfig {
                count: Some(a.per_class),
                ..Default::default()
            });
            run
        }
        Sub::Extract(a) => {
            let mut run = RunConfig::new(Command::Extract, a.common.seed, a.common.out);
            run.features = Some(a.features.resolve()?);
            run.dataset = a.size.map(|size| DatasetConfig {
                image_dir: a.input.clone(),
                target_size: size,
                split: 1.0,
                grayscale_features: true,
            });
            run.analysis = Some(AnalysisConfig {
                input: Some(a.input),
                ..Default::default()
            });
            run
        }
        Sub::Train(a) => {
            let features = a.features.resolve()?;
            let grayscale = features.kind != "encoder_layer";
            let mut run = RunConfig::new(Command::Train, a.common.seed, a.common.out);
            run.features = Some(features);
            run.dataset = Some(DatasetConfig {
                image_dir: a.data,
                target_size: a.size,
                split: a.split,
                grayscale_features: grayscale,
            });
            run.network = Some(NetworkConfig {
                width_divisor: a.width_divisor,
            });
            run.train = Some(TrainSection {
                steps: a.steps,
                batch: a.batch,
                lr: a.lr,
                beta1: 0.9,
                beta2: 0.999,
                adam_eps: 1e-8,
                lr_decay: a
                    .decay
                    .unwrap_or_else(|| TrainConfig::default_decay(a.steps)),
                mode: a.mode,
                divergence_factor: a.divergence_factor,
                montage_every: a.montage_every,
                resume: a.resume,
                encoder_input: None,
            });
            run
        }
        Sub::TrainEncoder(a) => {
            let mut run = RunConfig::new(Command::TrainEncoder, a.common.seed, a.common.out);
            run.dataset = Some(DatasetConfig {
                image_dir: a.data,
                target_size: [a.input_size, a.input_size],
                split: 1.0,
                grayscale_features: false,
            });
            run.train = Some(TrainSection {
                steps: a.steps,
                batch: a.batch,
                lr: a.lr,
                beta1: 0.9,
                beta2: 0.999,
                adam_eps: 1e-8,
                lr_decay: TrainConfig::default_decay(a.steps),
                mode: "fixed_encoder".into(),
                divergence_factor: 1e3,
                montage_every: 0,
                resume: None,
                encoder_input: Some(a.input_size),
            });
            run
        }
        Sub::Invert(a) => model_run(
            Command::Invert,
            &a.model,
            AnalysisConfig {
                input: Some(a.input),
                ..Default::default()
            },
        ),
        Sub::Evaluate(a) => {
            if a.checkpoint.is_none() == a.baseline.is_none() {
                return Err(Error::Usage(
                    "evaluate needs exactly one of --checkpoint and --baseline".into(),
                ));
            }
            if a.baseline.is_some() && a.data.is_none() {
                return Err(Error::Usage("a baseline needs --data".into()));
            }
            let mut run = RunConfig::new(Command::Evaluate, a.common.seed, a.common.out);
            run.checkpoint = a.checkpoint;
            run.dataset = a.data.map(|dir| DatasetConfig {
                image_dir: dir,
                target_size: a.size,
                split: a.split,
                grayscale_features: false,
            });
            run.analysis = Some(AnalysisConfig {
                baseline: a.baseline,
                images: Some(a.images),
                ..Default::default()
            });
            run
        }
        Sub::Perturb(a) => model_run(
            Command::Perturb,
            &a.model,
            AnalysisConfig {
                kind: Some(a.kind),
                fraction: a.fraction,
                k: a.k,
                input: a.input,
                images: Some(a.images),
                count: a.count,
                ..Default::default()
            },
        ),
        Sub::Interpolate(a) => model_run(
            Command::Interpolate,
            &a.model,
            AnalysisConfig {
                image_a: Some(a.a),
                image_b: Some(a.b),
                steps: Some(a.steps),
                ..Default::default()
            },
        ),
        Sub::FitDistribution(a) => model_run(
            Command::FitDistribution,
            &a.model,
            AnalysisConfig {
                fit_mode: Some(a.mode),
                bins: Some(a.bins),
                input: a.input,
                images: Some(a.images),
                ..Default::default()
            },
        ),
        Sub::Sample(a) => model_run(
            Command::Sample,
            &a.model,
            AnalysisConfig {
                distribution: Some(a.distribution),
                count: Some(a.count),
                alpha: Some(a.alpha),
                ..Default::default()
            },
        ),
        Sub::Run(a) => {
            let mut run = RunConfig::load(&a.config)?;
            if let Some(out) = a.out {
                run.out = out;
            }
            run
        }
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    execute(&resolve(cli)?)
}
