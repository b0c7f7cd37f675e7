//! Binary checkpoint, feature-map and distribution files plus the keypoint
//! text format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use invertkit_core::analysis::{DistributionModel, FeatureDistribution};
use invertkit_core::features::{Extractor, FeatureMap, Keypoint, KeypointSet, SIFT_DESCRIPTOR_LEN};
use invertkit_core::nets::{LayerParams, NetworkSpec};
use invertkit_core::network::Network;
use invertkit_core::rng::STATE_LEN;
use invertkit_core::train::{AdamState, Checkpoint};
use invertkit_core::{Shape, Tensor};

use crate::error::{Error, FormatError, Result};
use crate::framing::{check_version, Reader, Writer};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"IVKT";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const FEATURE_MAGIC: &[u8; 4] = b"IVKF";
pub const FEATURE_VERSION: u32 = 1;
pub const DISTRIBUTION_MAGIC: &[u8; 4] = b"IVKD";
pub const DISTRIBUTION_VERSION: u32 = 1;

type FResult<T> = std::result::Result<T, FormatError>;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path<T>(path: &Path, r: FResult<T>) -> Result<T> {
    r.map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(e: impl ToString) -> FormatError {
    FormatError::Invalid(e.to_string())
}

fn write_network(w: &mut Writer, net: &Network<f32>) {
    w.str(&net.spec().to_text());
    let tensors: Vec<_> = net.tensors().collect();
    w.u32(tensors.len() as u32);
    for (name, t) in tensors {
        w.tensor(&name, &t.shape().0, t.data());
    }
}

fn read_network(r: &mut Reader) -> FResult<Network<f32>> {
    let spec = NetworkSpec::parse(&r.str()?).map_err(invalid)?;
    let count = r.count(1)?;
    let mut params = Vec::with_capacity(spec.layers().len());
    let mut seen = 0;
    for (i, layer) in spec.layers().iter().enumerate() {
        let Some((ws, bs)) = layer.kind.param_shapes(spec.input_shapes(i)[0]) else {
            params.push(None);
            continue;
        };
        let mut read = |suffix: &str, shape: Shape| -> FResult<Tensor<f32>> {
            let name = format!("{}.{suffix}", layer.name);
            let t = r.tensor4(&name)?;
            if t.shape() != shape {
                return Err(FormatError::Invalid(format!(
                    "tensor {name:?} has shape {}, expected {shape}",
                    t.shape()
                )));
            }
            seen += 1;
            Ok(t)
        };
        let weights = read("weight", ws)?;
        let bias = read("bias", bs)?;
        params.push(Some(LayerParams { weights, bias }));
    }
    if seen != count {
        return Err(FormatError::Invalid(format!(
            "header lists {count} tensors, network has {seen}"
        )));
    }
    Network::new(spec, params).map_err(invalid)
}

pub fn encode_checkpoint(cp: &Checkpoint) -> Vec<u8> {
    let mut w = Writer::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    w.str(&cp.meta);
    match &cp.encoder {
        Some(e) => {
            w.u8(1);
            write_network(&mut w, e);
        }
        None => w.u8(0),
    }
    write_network(&mut w, &cp.decoder);
    w.u64(cp.adam.step);
    w.u32(cp.adam.m.len() as u32);
    for (i, (m, v)) in cp.adam.m.iter().zip(&cp.adam.v).enumerate() {
        w.tensor(&format!("adam.m.{i}"), &[m.len()], m);
        w.tensor(&format!("adam.v.{i}"), &[v.len()], v);
    }
    w.u64(cp.step);
    w.bytes(&cp.rng_state);
    w.u32(cp.losses.len() as u32);
    for &l in &cp.losses {
        w.f64(l);
    }
    w.finish()
}

pub fn decode_checkpoint(bytes: &[u8]) -> FResult<Checkpoint> {
    let (mut r, version) = Reader::open(bytes, CHECKPOINT_MAGIC)?;
    check_version(version, CHECKPOINT_VERSION)?;
    let meta = r.str()?;
    let encoder = match r.u8()? {
        0 => None,
        1 => Some(read_network(&mut r)?),
        t => return Err(FormatError::Invalid(format!("bad encoder flag {t}"))),
    };
    let decoder = read_network(&mut r)?;
    let adam_step = r.u64()?;
    let slots = r.count(2)?;
    let (mut m, mut v) = (Vec::with_capacity(slots), Vec::with_capacity(slots));
    for i in 0..slots {
        for (kind, out) in [("m", &mut m), ("v", &mut v)] {
            let (name, dims, data) = r.tensor()?;
            if name != format!("adam.{kind}.{i}") || dims.len() != 1 {
                return Err(FormatError::Invalid(format!(
                    "unexpected optimizer record {name:?}"
                )));
            }
            out.push(data);
        }
    }
    let step = r.u64()?;
    let rng = r.bytes()?;
    let rng_state: [u8; STATE_LEN] = rng.try_into().map_err(|_| {
        FormatError::Invalid(format!(
            "rng state is {} bytes, expected {STATE_LEN}",
            rng.len()
        ))
    })?;
    let n = r.count(8)?;
    let losses = (0..n).map(|_| r.f64()).collect::<FResult<Vec<_>>>()?;
    r.finish()?;
    Ok(Checkpoint {
        meta,
        encoder,
        decoder,
        adam: AdamState {
            step: adam_step,
            m,
            v,
        },
        step,
        rng_state,
        losses,
    })
}

pub fn save_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    write_file(path, &encode_checkpoint(cp))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = read_file(path)?;
    with_path(path, decode_checkpoint(&bytes))
}

pub fn encode_feature_map(fm: &FeatureMap) -> Vec<u8> {
    let mut w = Writer::new(FEATURE_MAGIC, FEATURE_VERSION);
    w.str(fm.extractor.name());
    w.u64(fm.cell as u64);
    w.u64(fm.source_size.0 as u64);
    w.u64(fm.source_size.1 as u64);
    w.tensor("features", &fm.tensor.shape().0, fm.tensor.data());
    w.finish()
}

pub fn decode_feature_map(bytes: &[u8]) -> FResult<FeatureMap> {
    let (mut r, version) = Reader::open(bytes, FEATURE_MAGIC)?;
    check_version(version, FEATURE_VERSION)?;
    let extractor = Extractor::from_name(&r.str()?).map_err(invalid)?;
    let cell = r.usize()?;
    let source_size = (r.usize()?, r.usize()?);
    let tensor = r.tensor4("features")?;
    r.finish()?;
    Ok(FeatureMap {
        tensor,
        extractor,
        cell,
        source_size,
    })
}

pub fn save_feature_map(path: &Path, fm: &FeatureMap) -> Result<()> {
    write_file(path, &encode_feature_map(fm))
}

pub fn load_feature_map(path: &Path) -> Result<FeatureMap> {
    let bytes = read_file(path)?;
    with_path(path, decode_feature_map(&bytes))
}

pub fn encode_distribution(d: &FeatureDistribution) -> Vec<u8> {
    let mut w = Writer::new(DISTRIBUTION_MAGIC, DISTRIBUTION_VERSION);
    for v in d.shape.0 {
        w.u64(v as u64);
    }
    w.u64(d.samples);
    w.u32(d.zero_counts.len() as u32);
    for &z in &d.zero_counts {
        w.u64(z);
    }
    match &d.model {
        DistributionModel::Histogram { ranges, counts } => {
            w.u8(0);
            w.u32(counts.first().map_or(0, |c| c.len()) as u32);
            for ((lo, hi), c) in ranges.iter().zip(counts) {
                w.f32(*lo);
                w.f32(*hi);
                for &n in c {
                    w.u64(n);
                }
            }
        }
        DistributionModel::TruncGaussian { mean, std, lower } => {
            w.u8(1);
            w.f64(*mean);
            w.f64(*std);
            match lower {
                Some(l) => {
                    w.u8(1);
                    w.f64(*l);
                }
                None => w.u8(0),
            }
        }
    }
    w.finish()
}

pub fn decode_distribution(bytes: &[u8]) -> FResult<FeatureDistribution> {
    let (mut r, version) = Reader::open(bytes, DISTRIBUTION_MAGIC)?;
    check_version(version, DISTRIBUTION_VERSION)?;
    let shape = Shape([r.usize()?, r.usize()?, r.usize()?, r.usize()?]);
    let samples = r.u64()?;
    let dims = r.count(8)?;
    if dims != shape.len() {
        return Err(FormatError::Invalid(format!(
            "{dims} zero counts for shape {shape}"
        )));
    }
    let zero_counts = (0..dims).map(|_| r.u64()).collect::<FResult<Vec<_>>>()?;
    let model = match r.u8()? {
        0 => {
            let bins = r.u32()? as usize;
            let mut ranges = Vec::with_capacity(dims);
            let mut counts = Vec::with_capacity(dims);
            for _ in 0..dims {
                ranges.push((r.f32()?, r.f32()?));
                counts.push((0..bins).map(|_| r.u64()).collect::<FResult<Vec<_>>>()?);
            }
            DistributionModel::Histogram { ranges, counts }
        }
        1 => {
            let mean = r.f64()?;
            let std = r.f64()?;
            let lower = match r.u8()? {
                0 => None,
                _ => Some(r.f64()?),
            };
            DistributionModel::TruncGaussian { mean, std, lower }
        }
        t => return Err(FormatError::Invalid(format!("unknown model tag {t}"))),
    };
    r.finish()?;
    Ok(FeatureDistribution {
        shape,
        samples,
        zero_counts,
        model,
    })
}

pub fn save_distribution(path: &Path, d: &FeatureDistribution) -> Result<()> {
    write_file(path, &encode_distribution(d))
}

pub fn load_distribution(path: &Path) -> Result<FeatureDistribution> {
    let bytes = read_file(path)?;
    with_path(path, decode_distribution(&bytes))
}

/// Fields per keypoint line: x, y, scale, orientation and the descriptor.
pub const KEYPOINT_FIELDS: usize = 4 + SIFT_DESCRIPTOR_LEN;

pub fn format_keypoints(set: &[Keypoint]) -> String {
    let mut s = String::from("# x y scale orientation d0..d127\n");
    for kp in set {
        let _ = write!(s, "{} {} {} {}", kp.x, kp.y, kp.scale, kp.orientation);
        for d in kp.descriptor {
            let _ = write!(s, " {d}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_keypoints(text: &str) -> invertkit_core::Result<KeypointSet> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| invertkit_core::Error::Parse {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != KEYPOINT_FIELDS {
            return Err(err(format!(
                "expected {KEYPOINT_FIELDS} fields, found {}",
                fields.len()
            )));
        }
        let num = |j: usize| -> invertkit_core::Result<f64> {
            fields[j]
                .parse::<f64>()
                .map_err(|_| err(format!("field {} is not a number: {:?}", j + 1, fields[j])))
        };
        let mut descriptor = [0f32; SIFT_DESCRIPTOR_LEN];
        for (k, d) in descriptor.iter_mut().enumerate() {
            *d = num(4 + k)? as f32;
        }
        out.push(Keypoint {
            x: num(0)?,
            y: num(1)?,
            scale: num(2)?,
            orientation: num(3)?,
            descriptor,
        });
    }
    Ok(out)
}

pub fn save_keypoints(path: &Path, set: &[Keypoint]) -> Result<()> {
    write_file(path, format_keypoints(set).as_bytes())
}

pub fn load_keypoints(path: &Path) -> Result<KeypointSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keypoints(&text).map_err(|e| match e {
        invertkit_core::Error::Parse { line, message } => Error::Format {
            path: path.to_path_buf(),
            source: FormatError::Invalid(format!("line {line}: {message}")),
        },
        other => Error::Core(other),
    })
}
