//! Declarative network specifications.
//!
//! Every inversion architecture is described as an ordered list of named
//! layers; a layer may read the network input (named [`INPUT`]) or any
//! earlier layer. The builders reproduce the reference layer sizes and take
//! a channel divisor so the same topologies can be trained at desk scale.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
pub use crate::ops::ItemShape;
use crate::ops::{conv_param_count, OpKind};
use crate::rng::Rng;
use crate::tensor::Tensor;
#[allow(unused_imports)]
use num_traits::Float;

/// Name by which layers refer to the network input.
pub const INPUT: &str = "input";

/// Slope of the leaky ReLU used throughout the inversion networks.
pub const LEAKY_SLOPE: f32 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    /// Slope 0 is a plain ReLU.
    LeakyRelu(f32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: OpKind,
    pub inputs: Vec<String>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    name: String,
    input_shape: ItemShape,
    layers: Vec<LayerSpec>,
    shapes: Vec<ItemShape>,
}

impl NetworkSpec {
    /// Validates the layer list and propagates shapes.
    ///
    /// Names must be unique, inputs must refer to earlier layers, every layer
    /// except the last must be consumed, and loss nodes are not allowed.
    pub fn new(
        name: impl Into<String>,
        input_shape: ItemShape,
        layers: Vec<LayerSpec>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        let mut seen = BTreeSet::new();
        let mut shapes: Vec<ItemShape> = Vec::with_capacity(layers.len());
        let mut consumed = vec![false; layers.len()];
        for layer in &layers {
            if layer.name == INPUT || !seen.insert(layer.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate layer name {:?}",
                    layer.name
                )));
            }
            if layer.kind == OpKind::Mse {
                return Err(Error::Config(format!(
                    "layer {:?}: loss nodes cannot be network layers",
                    layer.name
                )));
            }
            if let Activation::LeakyRelu(s) = layer.activation {
                if !(0.0..1.0).contains(&s) {
                    return Err(Error::Config(format!(
                        "layer {:?}: slope {s} outside [0, 1)",
                        layer.name
                    )));
                }
            }
            let mut in_shapes = Vec::with_capacity(layer.inputs.len());
            for input in &layer.inputs {
                if input == INPUT {
                    in_shapes.push(input_shape);
                    continue;
                }
                let idx = layers
                    .iter()
                    .take(shapes.len())
                    .position(|l| &l.name == input)
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "layer {:?} reads unknown or later layer {input:?}",
                            layer.name
                        ))
                    })?;
                consumed[idx] = true;
                in_shapes.push(shapes[idx]);
            }
            let out = layer
                .kind
                .output_shape(&in_shapes)
                .map_err(|e| Error::Config(format!("layer {:?}: {e}", layer.name)))?;
            shapes.push(out);
        }
        if let Some(i) = consumed[..layers.len() - 1].iter().position(|c| !c) {
            return Err(Error::Config(format!(
                "layer {:?} is not consumed; the last layer must be the only output",
                layers[i].name
            )));
        }
        Ok(NetworkSpec {
            name: name.into(),
            input_shape,
            layers,
            shapes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> ItemShape {
        self.input_shape
    }

    pub fn output_shape(&self) -> ItemShape {
        *self.shapes.last().unwrap()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Output shape of every layer, in layer order.
    pub fn shapes(&self) -> &[ItemShape] {
        &self.shapes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Input shapes of layer `i`.
    pub fn input_shapes(&self, i: usize) -> Vec<ItemShape> {
        self.layers[i]
            .inputs
            .iter()
            .map(|n| {
                if n == INPUT {
                    self.input_shape
                } else {
                    self.shapes[self.index_of(n).unwrap()]
                }
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        (0..self.layers.len())
            .filter_map(|i| {
                let (w, b) = self.layers[i].kind.param_shapes(self.input_shapes(i)[0])?;
                Some(w.len() + b.len())
            })
            .sum()
    }

    /// The sub-network computing layer `last` (only its ancestors are kept).
    pub fn truncated(&self, last: &str) -> Result<NetworkSpec> {
        let end = self
            .index_of(last)
            .ok_or_else(|| Error::Config(format!("no layer named {last:?}")))?;
        let mut needed = vec![false; end + 1];
        needed[end] = true;
        for i in (0..=end).rev() {
            if !needed[i] {
                continue;
            }
            for input in &self.layers[i].inputs {
                if let Some(j) = self.index_of(input) {
                    needed[j] = true;
                }
            }
        }
        let layers = self.layers[..=end]
            .iter()
            .zip(&needed)
            .filter(|(_, n)| **n)
            .map(|(l, _)| l.clone())
            .collect();
        NetworkSpec::new(format!("{}:{last}", self.name), self.input_shape, layers)
    }

    /// Line-oriented text form, parsed back by [`NetworkSpec::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (c, h, w) = self.input_shape;
        let _ = writeln!(s, "network {}", self.name);
        let _ = writeln!(s, "input {c} {h} {w}");
        for l in &self.layers {
            let _ = write!(s, "layer {} {}", l.name, l.kind.name());
            match l.kind {
                OpKind::Conv {
                    kernel,
                    stride,
                    out_channels,
                } => {
                    let _ = write!(s, " k={kernel} s={stride} out={out_channels}");
                }
                OpKind::UpConv {
                    kernel,
                    out_channels,
                } => {
                    let _ = write!(s, " k={kernel} out={out_channels}");
                }
                OpKind::Fc { out_features } => {
                    let _ = write!(s, " out={out_features}");
                }
                OpKind::LeakyRelu { slope } => {
                    let _ = write!(s, " slope={slope}");
                }
                OpKind::MaxPool { window, stride } => {
                    let _ = write!(s, " window={window} s={stride}");
                }
                OpKind::Reshape {
                    channels,
                    height,
                    width,
                } => {
                    let _ = write!(s, " c={channels} h={height} w={width}");
                }
                OpKind::Concat | OpKind::Mse => {}
            }
            match l.activation {
                Activation::Identity => s.push_str(" act=none"),
                Activation::LeakyRelu(a) => {
                    let _ = write!(s, " act=leaky:{a}");
                }
            }
            let _ = writeln!(s, " in={}", l.inputs.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<NetworkSpec> {
        let mut name = None;
        let mut input = None;
        let mut layers = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut words = line.split_whitespace();
            match words.next() {
                None => continue,
                Some("network") => name = Some(words.next().unwrap_or("").to_string()),
                Some("input") => {
                    let dims: Vec<usize> = words
                        .map(|w| w.parse().map_err(|_| err(format!("bad dimension {w:?}"))))
                        .collect::<Result<_>>()?;
                    if dims.len() != 3 {
                        return Err(err("input needs 3 dimensions".into()));
                    }
                    input = Some((dims[0], dims[1], dims[2]));
                }
                Some("layer") => {
                    let lname = words
                        .next()
                        .ok_or_else(|| err("missing layer name".into()))?;
                    let kind_name = words
                        .next()
                        .ok_or_else(|| err("missing layer kind".into()))?;
                    let mut kv = alloc::collections::BTreeMap::new();
                    for w in words {
                        let (k, v) = w
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected key=value, got {w:?}")))?;
                        kv.insert(k, v);
                    }
                    let num = |key: &str| -> Result<usize> {
                        kv.get(key)
                            .ok_or_else(|| err(format!("missing {key}")))?
                            .parse()
                            .map_err(|_| err(format!("bad value for {key}")))
                    };
                    let kind = match kind_name {
                        "conv" => OpKind::Conv {
                            kernel: num("k")?,
                            stride: num("s")?,
                            out_channels: num("out")?,
                        },
                        "upconv" => OpKind::UpConv {
                            kernel: num("k")?,
                            out_channels: num("out")?,
                        },
                        "fc" => OpKind::Fc {
                            out_features: num("out")?,
                        },
                        "leaky_relu" => OpKind::LeakyRelu {
                            slope: kv
                                .get("slope")
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| err("bad slope".into()))?,
                        },
                        "maxpool" => OpKind::MaxPool {
                            window: num("window")?,
                            stride: num("s")?,
                        },
                        "concat" => OpKind::Concat,
                        "reshape" => OpKind::Reshape {
                            channels: num("c")?,
                            height: num("h")?,
                            width: num("w")?,
                        },
                        other => return Err(err(format!("unknown layer kind {other:?}"))),
                    };
                    let activation = match kv.get("act").copied() {
                        None | Some("none") => Activation::Identity,
                        Some(a) => match a.strip_prefix("leaky:").and_then(|v| v.parse().ok()) {
                            Some(slope) => Activation::LeakyRelu(slope),
                            None => return Err(err(format!("bad activation {a:?}"))),
                        },
                    };
                    let inputs = kv
                        .get("in")
                        .ok_or_else(|| err("missing in=".into()))?
                        .split(',')
                        .map(String::from)
                        .collect();
                    layers.push(LayerSpec {
                        name: lname.into(),
                        kind,
                        inputs,
                        activation,
                    });
                }
                Some(other) => return Err(err(format!("unknown directive {other:?}"))),
            }
        }
        let input = input.ok_or(Error::Parse {
            line: 0,
            message: "missing input line".into(),
        })?;
        NetworkSpec::new(name.unwrap_or_default(), input, layers)
    }
}

struct Builder {
    layers: Vec<LayerSpec>,
    divisor: usize,
}

impl Builder {
    fn new(divisor: usize) -> Self {
        Builder {
            layers: Vec::new(),
            divisor: divisor.max(1),
        }
    }

    fn width(&self, channels: usize) -> usize {
        (channels / self.divisor).max(1)
    }

    fn push(
        &mut self,
        name: &str,
        kind: OpKind,
        inputs: &[&str],
        activation: Activation,
    ) -> &mut Self {
        self.layers.push(LayerSpec {
            name: name.into(),
            kind,
            inputs: inputs.iter().map(|s| String::from(*s)).collect(),
            activation,
        });
        self
    }

    fn conv(
        &mut self,
        name: &str,
        input: &str,
        kernel: usize,
        stride: usize,
        channels: usize,
    ) -> &mut Self {
        let out_channels = self.width(channels);
        self.push(
            name,
            OpKind::Conv {
                kernel,
                stride,
                out_channels,
            },
            &[input],
            Activation::LeakyRelu(LEAKY_SLOPE),
        )
    }

    fn upconv(&mut self, name: &str, input: &str, kernel: usize, channels: usize) -> &mut Self {
        let out_channels = self.width(channels);
        self.push(
            name,
            OpKind::UpConv {
                kernel,
                out_channels,
            },
            &[input],
            Activation::LeakyRelu(LEAKY_SLOPE),
        )
    }

    /// The image-producing layer: 3 channels and no nonlinearity.
    fn output_upconv(&mut self, name: &str, input: &str, kernel: usize) -> &mut Self {
        self.push(
            name,
            OpKind::UpConv {
                kernel,
                out_channels: 3,
            },
            &[input],
            Activation::Identity,
        )
    }

    fn concat(&mut self, name: &str, a: &str, b: &str) -> &mut Self {
        self.push(name, OpKind::Concat, &[a, b], Activation::Identity)
    }

    fn finish(self, name: &str, input: ItemShape) -> Result<NetworkSpec> {
        NetworkSpec::new(name, input, self.layers)
    }
}

/// Channel count of HOG features.
pub const HOG_CHANNELS: usize = 31;
/// Channel count of uniform LBP histograms.
pub const LBP_CHANNELS: usize = 58;
/// Channel count of the sparse SIFT grid (128-d descriptor + 5 geometry values).
pub const SIFT_GRID_CHANNELS: usize = 133;

/// HOG inversion network for an `h × w` grid of HOG cells.
///
/// Stream A compresses by 8× and expands back, stream B keeps full cell
/// resolution; the two are concatenated and up-convolved 8× to the image.
pub fn hog_net(grid: (usize, usize), width_divisor: usize) -> Result<NetworkSpec> {
    let mut b = Builder::new(width_divisor);
    b.conv("convA1", INPUT, 5, 2, 256)
        .conv("convA2", "convA1", 5, 2, 512)
        .conv("convA3", "convA2", 3, 2, 1024)
        .upconv("upconvA1", "convA3", 4, 512)
        .upconv("upconvA2", "upconvA1", 4, 256)
        .upconv("upconvA3", "upconvA2", 4, 128)
        .conv("convB1", INPUT, 5, 1, 128)
        .conv("convB2", "convB1", 3, 1, 128)
        .concat("join", "upconvA3", "convB2")
        .conv("convJ1", "join", 3, 1, 256)
        .conv("convJ2", "convJ1", 3, 1, 128)
        .upconv("upconvJ4", "convJ2", 4, 64)
        .upconv("upconvJ5", "upconvJ4", 4, 32)
        .output_upconv("upconvJ6", "upconvJ5", 4);
    b.finish("hog", (HOG_CHANNELS, grid.0, grid.1))
}

/// The published HOG network: 32×32×31 features to a 256×256×3 image.
pub fn build_hog_net() -> NetworkSpec {
    hog_net((32, 32), 1).expect("published HOG network is valid")
}

/// LBP inversion network for an `h × w` grid of 16-pixel cells.
pub fn lbp_net(grid: (usize, usize), width_divisor: usize) -> Result<NetworkSpec> {
    let mut b = Builder::new(width_divisor);
    b.conv("convA1", INPUT, 5, 2, 256)
        .conv("convA2", "convA1", 5, 2, 512)
        .conv("convA3", "convA2", 3, 1, 1024)
        .upconv("upconvA1", "convA3", 4, 512)
        .upconv("upconvA2", "upconvA1", 4, 256)
        .conv("convB1", INPUT, 5, 1, 128)
        .conv("convB2", "convB1", 3, 1, 128)
        .concat("join", "upconvA2", "convB2")
        .conv("convJ1", "join", 3, 1, 256)
        .conv("convJ2", "convJ1", 3, 1, 128)
        .upconv("upconvJ3", "convJ2", 4, 128)
        .upconv("upconvJ4", "upconvJ3", 4, 64)
        .upconv("upconvJ5", "upconvJ4", 4, 32)
        .output_upconv("upconvJ6", "upconvJ5", 4);
    b.finish("lbp", (LBP_CHANNELS, grid.0, grid.1))
}

/// The published LBP network: 16×16×58 features to a 256×256×3 image.
pub fn build_lbp_net() -> NetworkSpec {
    lbp_net((16, 16), 1).expect("published LBP network is valid")
}

/// Single-stream SIFT grid inversion network (16× down, 64× up).
pub fn sift_net(grid: (usize, usize), width_divisor: usize) -> Result<NetworkSpec> {
    let mut b = Builder::new(width_divisor);
    b.conv("conv1", INPUT, 5, 2, 256)
        .conv("conv2", "conv1", 3, 2, 512)
        .conv("conv3", "conv2", 3, 2, 1024)
        .conv("conv4", "conv3", 3, 2, 2048)
        .conv("conv5", "conv4", 3, 1, 2048)
        .conv("conv6", "conv5", 3, 1, 1024)
        .upconv("upconv1", "conv6", 4, 512)
        .upconv("upconv2", "upconv1", 4, 256)
        .upconv("upconv3", "upconv2", 4, 128)
        .upconv("upconv4", "upconv3", 4, 64)
        .upconv("upconv5", "upconv4", 4, 32)
        .output_upconv("upconv6", "upconv5", 4);
    b.finish("sift", (SIFT_GRID_CHANNELS, grid.0, grid.1))
}

/// The published SIFT network: 64×64×133 grid to a 256×256×3 image.
pub fn build_sift_net() -> NetworkSpec {
    sift_net((64, 64), 1).expect("published SIFT network is valid")
}

/// Output channels of the `i`-th of `count` up-convolutions starting from
/// `channels`: unchanged first, halved each further step, 3 at the end.
fn upconv_schedule(channels: usize, count: usize) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        if i + 1 == count {
            out.push(3);
        } else {
            let div = 1usize << i;
            if channels % div != 0 || channels / div < 3 {
                return Err(Error::Config(format!(
                    "cannot halve {channels} channels {i} times across {count} up-convolutions"
                )));
            }
            out.push(channels / div);
        }
    }
    Ok(out)
}

/// Fully connected inversion network: three dense layers, a reshape to
/// 4×4×(4096/16) and `upconvs` up-convolutions with 5×5 kernels.
pub fn fc_inversion_net(
    input_dim: usize,
    width_divisor: usize,
    upconvs: usize,
) -> Result<NetworkSpec> {
    if input_dim == 0 || upconvs == 0 {
        return Err(Error::Config(
            "input dimension and up-convolution count must be positive".into(),
        ));
    }
    let mut b = Builder::new(width_divisor);
    let hidden = b.width(4096);
    if hidden % 16 != 0 {
        return Err(Error::Config(format!(
            "hidden width {hidden} does not reshape to 4x4"
        )));
    }
    let fc = |out_features| OpKind::Fc { out_features };
    let act = Activation::LeakyRelu(LEAKY_SLOPE);
    b.push("fc1", fc(hidden), &[INPUT], act)
        .push("fc2", fc(hidden), &["fc1"], act)
        .push("fc3", fc(hidden), &["fc2"], act)
        .push(
            "reshape",
            OpKind::Reshape {
                channels: hidden / 16,
                height: 4,
                width: 4,
            },
            &["fc3"],
            Activation::Identity,
        );
    append_upconvs(&mut b, "reshape", hidden / 16, upconvs)?;
    b.finish("fc_inversion", (input_dim, 1, 1))
}

/// The published fully connected inversion network (five up-convolutions to 128×128×3).
pub fn build_fc_inversion_net(input_dim: usize) -> Result<NetworkSpec> {
    fc_inversion_net(input_dim, 1, 5)
}

fn append_upconvs(b: &mut Builder, from: &str, channels: usize, count: usize) -> Result<()> {
    let schedule = upconv_schedule(channels, count)?;
    let mut prev = String::from(from);
    for (i, &c) in schedule.iter().enumerate() {
        let name = format!("upconv{}", i + 1);
        let kind = OpKind::UpConv {
            kernel: 5,
            out_channels: c,
        };
        let act = if i + 1 == count {
            Activation::Identity
        } else {
            Activation::LeakyRelu(LEAKY_SLOPE)
        };
        b.push(&name, kind, &[prev.as_str()], act);
        prev = name;
    }
    Ok(())
}

/// Up-convolutions needed to grow `from` to at least `target` by doubling.
pub fn doublings(from: usize, target: usize) -> usize {
    let mut n = 0;
    let mut size = from.max(1);
    while size < target {
        size *= 2;
        n += 1;
    }
    n
}

/// Convolutional-feature inversion network: three size-preserving 3×3
/// convolutions followed by 5×5 up-convolutions until the output reaches
/// `target` pixels on the short side.
pub fn conv_inversion_net(
    input: ItemShape,
    target: usize,
    width_divisor: usize,
) -> Result<NetworkSpec> {
    let (c, h, w) = input;
    if h < 1 || w < 1 {
        return Err(Error::Config("input must be non-empty".into()));
    }
    let count = doublings(h.min(w), target);
    if count == 0 {
        return Err(Error::Config(format!(
            "target {target} is not larger than input {h}x{w}"
        )));
    }
    let mut b = Builder::new(width_divisor);
    let width = b.width(c);
    for (i, name) in ["conv1", "conv2", "conv3"].iter().enumerate() {
        let from = if i == 0 {
            INPUT
        } else {
            ["conv1", "conv2"][i - 1]
        };
        b.push(
            name,
            OpKind::Conv {
                kernel: 3,
                stride: 1,
                out_channels: width,
            },
            &[from],
            Activation::LeakyRelu(LEAKY_SLOPE),
        );
    }
    append_upconvs(&mut b, "conv3", width, count)?;
    b.finish("conv_inversion", input)
}

/// Convolutional inversion network growing the input 32× (e.g. 6×6 → 192×192).
pub fn build_conv_inversion_net(input: ItemShape) -> Result<NetworkSpec> {
    if input.1 < 4 || input.2 < 4 {
        return Err(Error::Config(format!(
            "input {}x{} smaller than 4x4",
            input.1, input.2
        )));
    }
    conv_inversion_net(input, 32 * input.1.min(input.2), 1)
}

/// A small classification network standing in for AlexNet, with named taps
/// mirroring its conv1..fc8 outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderSpec {
    pub network: NetworkSpec,
    /// (tap, layer) pairs in depth order.
    pub taps: Vec<(String, String)>,
}

pub const TAPS: [&str; 8] = [
    "conv1", "conv2", "conv3", "conv4", "conv5", "fc6", "fc7", "fc8",
];

impl EncoderSpec {
    pub fn tap_layer(&self, tap: &str) -> Result<&str> {
        self.taps
            .iter()
            .find(|(t, _)| t == tap)
            .map(|(_, l)| l.as_str())
            .ok_or_else(|| Error::Config(format!("unknown encoder tap {tap:?}")))
    }

    /// Encoder truncated after `tap`.
    pub fn up_to(&self, tap: &str) -> Result<NetworkSpec> {
        self.network.truncated(self.tap_layer(tap)?)
    }

    pub fn tap_shape(&self, tap: &str) -> Result<ItemShape> {
        let layer = self.tap_layer(tap)?;
        Ok(self.network.shapes()[self.network.index_of(layer).unwrap()])
    }
}

/// Builds the toy encoder. Taps are taken after the activation (and after
/// pooling where a stage pools); `fc8` is the pre-softmax class score.
pub fn build_toy_encoder(input: ItemShape, classes: usize) -> Result<EncoderSpec> {
    if classes < 2 {
        return Err(Error::Config("toy encoder needs at least 2 classes".into()));
    }
    let relu = Activation::LeakyRelu(0.0);
    let conv = |k, s, c| OpKind::Conv {
        kernel: k,
        stride: s,
        out_channels: c,
    };
    let pool = OpKind::MaxPool {
        window: 2,
        stride: 2,
    };
    let mut b = Builder::new(1);
    b.push("conv1", conv(5, 2, 32), &[INPUT], relu)
        .push("pool1", pool, &["conv1"], Activation::Identity)
        .push("conv2", conv(5, 1, 64), &["pool1"], relu)
        .push("pool2", pool, &["conv2"], Activation::Identity)
        .push("conv3", conv(3, 1, 96), &["pool2"], relu)
        .push("conv4", conv(3, 1, 96), &["conv3"], relu)
        .push("conv5", conv(3, 1, 64), &["conv4"], relu)
        .push("pool5", pool, &["conv5"], Activation::Identity)
        .push("fc6", OpKind::Fc { out_features: 256 }, &["pool5"], relu)
        .push("fc7", OpKind::Fc { out_features: 256 }, &["fc6"], relu)
        .push(
            "fc8",
            OpKind::Fc {
                out_features: classes,
            },
            &["fc7"],
            Activation::Identity,
        );
    let network = b.finish("toy_encoder", input)?;
    let layers = [
        "pool1", "pool2", "conv3", "conv4", "pool5", "fc6", "fc7", "fc8",
    ];
    let taps = TAPS
        .iter()
        .zip(layers)
        .map(|(t, l)| (String::from(*t), String::from(l)))
        .collect();
    Ok(EncoderSpec { network, taps })
}

/// Weight and bias tensors of one parameterized layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// He initialization: weights ~ N(0, 2 / fan_in) with `fan_in = in·K·K`
/// (or the input length for dense layers); biases zero. Layers draw from
/// `rng` in layer order.
pub fn init_weights(spec: &NetworkSpec, rng: &mut Rng) -> Vec<Option<LayerParams<f32>>> {
    (0..spec.layers().len())
        .map(|i| {
            let (ws, bs) = spec.layers()[i]
                .kind
                .param_shapes(spec.input_shapes(i)[0])?;
            let fan_in = ws.item_len();
            let std = (2.0 / fan_in as f64).sqrt();
            let data = (0..ws.len())
                .map(|_| (rng.sample::<f64, _>(StandardNormal) * std) as f32)
                .collect();
            Some(LayerParams {
                weights: Tensor::from_vec(ws, data).unwrap(),
                bias: Tensor::zeros(bs),
            })
        })
        .collect()
}

/// Independent per-row parameter count: `K·K·in·out + out` for
/// (up-)convolutions and `in·out + out` for dense layers.
pub fn table_param_count(spec: &NetworkSpec) -> usize {
    let mut total = 0;
    for (i, layer) in spec.layers().iter().enumerate() {
        let (c, h, w) = spec.input_shapes(i)[0];
        total += match layer.kind {
            OpKind::Conv {
                kernel,
                out_channels,
                ..
            }
            | OpKind::UpConv {
                kernel,
                out_channels,
            } => conv_param_count(kernel, c, out_channels),
            OpKind::Fc { out_features } => c * h * w * out_features + out_features,
            _ => 0,
        };
    }
    total
}
