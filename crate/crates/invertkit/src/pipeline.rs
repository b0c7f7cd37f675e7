//! Feature extraction, decoder construction and batched decoding shared by
//! the commands.

use std::path::Path;

use invertkit_core::features::{
    hog_extract, lbp_extract, sift_detect_describe, sift_grid_encode, to_grayscale, Extractor,
    FeatureMap, KeypointSet, SiftOptions,
};
use invertkit_core::image::{center, clamp_unit, resize_bilinear, uncenter};
use invertkit_core::nets::{
    build_toy_encoder, conv_inversion_net, doublings, fc_inversion_net, hog_net, lbp_net, sift_net,
    ItemShape, NetworkSpec,
};
use invertkit_core::network::Network;
use invertkit_core::rng::stream;
use invertkit_core::Tensor;
use rayon::prelude::*;

use crate::config::FeatureConfig;
use crate::error::{Error, Result};
use crate::formats::load_checkpoint;

/// Stream offset for SIFT cell selection so it never shares a stream with
/// other seeded draws of the same run.
const SIFT_STREAM: u64 = 1 << 32;

/// A ready-to-run feature extractor.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub kind: Extractor,
    pub cell: usize,
    /// Encoder truncated after the tap, for `encoder_layer`.
    pub encoder: Option<Network<f32>>,
    pub seed: u64,
}

pub fn parse_kind(kind: &str) -> Result<Extractor> {
    Ok(Extractor::from_name(kind)?)
}

/// Default cell size per extractor.
pub fn default_cell(kind: Extractor) -> usize {
    match kind {
        Extractor::Hog => 8,
        Extractor::Lbp => 16,
        Extractor::SiftGrid => 4,
        Extractor::EncoderLayer => 1,
    }
}

/// Loads a toy-encoder checkpoint and cuts it after `tap`.
pub fn load_encoder(path: &Path, tap: &str) -> Result<Network<f32>> {
    let cp = load_checkpoint(path)?;
    let full = cp.decoder;
    let (c, h, w) = full.spec().input_shape();
    let classes = full.spec().output_shape().0;
    let enc = build_toy_encoder((c, h, w), classes)?;
    if &enc.network != full.spec() {
        return Err(Error::Config(format!(
            "{} does not hold a toy encoder",
            path.display()
        )));
    }
    truncate(&full, &enc.up_to(tap)?)
}

/// The sub-network of `full` described by `spec`, sharing its parameters.
pub fn truncate(full: &Network<f32>, spec: &NetworkSpec) -> Result<Network<f32>> {
    let params = spec
        .layers()
        .iter()
        .map(|l| full.params()[full.spec().index_of(&l.name).unwrap()].clone())
        .collect();
    Ok(Network::new(spec.clone(), params)?)
}

impl Extraction {
    pub fn from_config(fc: &FeatureConfig, seed: u64) -> Result<Self> {
        let kind = parse_kind(&fc.kind)?;
        let encoder = match kind {
            Extractor::EncoderLayer => {
                let path = fc.encoder.as_deref().ok_or_else(|| {
                    Error::Usage("encoder_layer features need an encoder checkpoint".into())
                })?;
                let tap = fc.tap.as_deref().ok_or_else(|| {
                    Error::Usage("encoder_layer features need a tap".into())
                })?;
                Some(load_encoder(path, tap)?)
            }
            _ => None,
        };
        Ok(Extraction {
            kind,
            cell: fc.cell,
            encoder,
            seed,
        })
    }

    /// Encoder input size as (width, height), if this is an encoder tap.
    pub fn encoder_size(&self) -> Option<(usize, usize)> {
        self.encoder.as_ref().map(|e| {
            let (_, h, w) = e.spec().input_shape();
            (w, h)
        })
    }

    /// Image as seen by the encoder.
    pub fn encoder_view(&self, image: &Tensor<f32>) -> Result<Tensor<f32>> {
        match self.encoder_size() {
            Some((w, h)) if (image.shape().w(), image.shape().h()) != (w, h) => {
                Ok(resize_bilinear(image, h, w)?)
            }
            _ => Ok(image.clone()),
        }
    }

    /// Features of one (1, 3, H, W) image; `index` seeds SIFT cell selection.
    pub fn extract(&self, image: &Tensor<f32>, index: u64) -> Result<(FeatureMap, Option<KeypointSet>)> {
        let s = image.shape();
        let source_size = (s.w(), s.h());
        let gray = || -> Result<Tensor<f32>> {
            Ok(if s.c() == 1 {
                image.clone()
            } else {
                to_grayscale(image)?
            })
        };
        Ok(match self.kind {
            Extractor::Hog => (hog_extract(&gray()?, self.cell)?, None),
            Extractor::Lbp => (lbp_extract(&gray()?, self.cell)?, None),
            Extractor::SiftGrid => {
                let kps = sift_detect_describe(&gray()?, &SiftOptions::default())?;
                let mut rng = stream(self.seed, SIFT_STREAM + index);
                let fm = sift_grid_encode(&kps, source_size, self.cell, &mut rng)?;
                (fm, Some(kps))
            }
            Extractor::EncoderLayer => {
                let enc = self.encoder.as_ref().expect("encoder loaded");
                let tensor = enc.predict(&self.encoder_view(image)?)?;
                let fm = FeatureMap {
                    tensor,
                    extractor: Extractor::EncoderLayer,
                    cell: 1,
                    source_size,
                };
                (fm, None)
            }
        })
    }

    /// Network inputs for every image, computed in parallel, in input order.
    pub fn network_inputs(&self, images: &[Tensor<f32>]) -> Result<Vec<Tensor<f32>>> {
        images
            .par_iter()
            .enumerate()
            .map(|(i, img)| Ok(self.extract(img, i as u64)?.0.network_input()))
            .collect()
    }
}

/// Inversion network for features of `input` shape aiming at `target`
/// = (width, height) pixels.
pub fn build_decoder(
    kind: Extractor,
    input: ItemShape,
    target: (usize, usize),
    width_divisor: usize,
) -> Result<NetworkSpec> {
    let (c, h, w) = input;
    Ok(match kind {
        Extractor::Hog => hog_net((h, w), width_divisor)?,
        Extractor::Lbp => lbp_net((h, w), width_divisor)?,
        Extractor::SiftGrid => sift_net((h, w), width_divisor)?,
        Extractor::EncoderLayer => {
            let short = target.0.min(target.1);
            if h == 1 && w == 1 {
                fc_inversion_net(c, width_divisor, doublings(4, short).max(1))?
            } else {
                conv_inversion_net(input, short, width_divisor)?
            }
        }
    })
}

/// Training targets: images resized to the decoder output and centered.
pub fn targets_for(decoder: &NetworkSpec, images: &[Tensor<f32>]) -> Result<Vec<Tensor<f32>>> {
    let (_, h, w) = decoder.output_shape();
    images
        .par_iter()
        .map(|img| {
            let s = img.shape();
            let img = if (s.h(), s.w()) != (h, w) {
                resize_bilinear(img, h, w)?
            } else {
                img.clone()
            };
            Ok(center(&img))
        })
        .collect()
}

/// Decodes each input on its own (so results do not depend on batching or
/// the worker count) and returns images in [0, 1].
pub fn decode_all(
    encoder: Option<&Network<f32>>,
    decoder: &Network<f32>,
    inputs: &[Tensor<f32>],
) -> Result<Vec<Tensor<f32>>> {
    inputs
        .par_iter()
        .map(|x| {
            let x = match encoder {
                Some(e) => e.predict(x)?,
                None => x.clone(),
            };
            Ok(clamp_unit(&uncenter(&decoder.predict(&x)?)))
        })
        .collect()
}

/// Checks a feature tensor against the decoder input, naming both shapes.
pub fn check_input(decoder: &NetworkSpec, features: &Tensor<f32>) -> Result<()> {
    let expected = decoder.input_shape();
    let s = features.shape();
    let found = (s.c(), s.h(), s.w());
    if found != expected {
        return Err(Error::Core(invertkit_core::Error::Validation(format!(
            "features of shape {}x{}x{} (CxHxW) do not fit the network, which expects {}x{}x{}",
            found.0, found.1, found.2, expected.0, expected.1, expected.2
        ))));
    }
    Ok(())
}

/// Caps the global worker pool at `INVERTKIT_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("INVERTKIT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
