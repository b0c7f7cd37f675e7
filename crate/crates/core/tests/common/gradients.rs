//! Finite-difference checks of every differentiable operation.
//!
//! Each operation `y = f(θ)` is scalarized as `L = Σ r ⊙ y` with a fixed
//! random `r`, so its analytic gradient is the backward pass applied to `r`.

use invertkit_core::gradcheck::{
    finite_difference_check, FnObjective, GradCheckOptions, GradCheckReport, NetworkObjective,
};
use invertkit_core::nets::{build_toy_encoder, fc_inversion_net, hog_net, HOG_CHANNELS};
use invertkit_core::network::Network;
use invertkit_core::ops::{
    concat_channels, conv2d, conv2d_backward, fully_connected, fully_connected_backward,
    leaky_relu, leaky_relu_backward, max_pool2d, max_pool2d_backward, mse_loss, mse_loss_grad,
    split_channels, upconv2d, upconv2d_backward, upsample2x_zero_stuff,
    upsample2x_zero_stuff_backward, Padding,
};
use invertkit_core::rng::{seeded, Rng as SeededRng};
use invertkit_core::{Result, Shape, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

use super::random_tensor;

type Forward = Box<dyn Fn(&[Tensor<f64>]) -> Result<Tensor<f64>>>;
type Backward = Box<dyn Fn(&[Tensor<f64>], &Tensor<f64>) -> Result<Vec<Tensor<f64>>>>;

fn rebuild(shapes: &[Shape], values: &[Vec<f64>]) -> Vec<Tensor<f64>> {
    shapes
        .iter()
        .zip(values)
        .map(|(s, v)| Tensor::from_vec(*s, v.clone()).unwrap())
        .collect()
}

/// Checks `Σ r ⊙ forward(θ)` against `backward(θ, r)`.
fn probe(
    tensors: Vec<(&str, Tensor<f64>)>,
    forward: Forward,
    backward: Backward,
    rng: &mut SeededRng,
) -> GradCheckReport {
    let shapes: Vec<Shape> = tensors.iter().map(|(_, t)| t.shape()).collect();
    let values: Vec<Tensor<f64>> = tensors.iter().map(|(_, t)| t.clone()).collect();
    let out_shape = forward(&values).unwrap().shape();
    let r: Tensor<f64> = random_tensor(out_shape, rng);
    let r2 = r.clone();
    let s2 = shapes.clone();
    let named = tensors
        .into_iter()
        .map(|(n, t)| (n.to_string(), t.into_data()))
        .collect();
    let mut objective = FnObjective::new(
        named,
        move |v| {
            let y = forward(&rebuild(&shapes, v))?;
            Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
        },
        move |v| {
            Ok(backward(&rebuild(&s2, v), &r2)?
                .into_iter()
                .map(|t| t.into_data())
                .collect())
        },
    );
    finite_difference_check(&mut objective, &GradCheckOptions::default()).unwrap()
}

fn merge(into: &mut GradCheckReport, r: GradCheckReport) {
    into.checked += r.checked;
    into.skipped += r.skipped;
    into.max_relative_error = into.max_relative_error.max(r.max_relative_error);
    into.mismatches.extend(r.mismatches);
}

fn conv_instance(rng: &mut SeededRng) -> GradCheckReport {
    let (n, c, o) = (
        rng.random_range(1..=2),
        rng.random_range(1..=4),
        rng.random_range(1..=3),
    );
    let (h, w) = (rng.random_range(3..=8), rng.random_range(3..=8));
    let k = rng.random_range(1..=5);
    let s = rng.random_range(1..=2);
    let x = random_tensor(Shape::new(n, c, h, w), rng);
    let wt = random_tensor(Shape::new(o, c, k, k), rng);
    let b = random_tensor(Shape::vector(1, o), rng);
    let pad = Padding::same(k);
    probe(
        vec![("x", x), ("w", wt), ("b", b)],
        Box::new(move |t| conv2d(&t[0], &t[1], &t[2], s, pad)),
        Box::new(move |t, r| {
            let g = conv2d_backward(&t[0], &t[1], s, pad, r, true)?;
            Ok(vec![g.input.unwrap(), g.weights, g.bias])
        }),
        rng,
    )
}

fn upconv_instance(rng: &mut SeededRng) -> GradCheckReport {
    let (n, c, o) = (
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
    );
    let (h, w) = (rng.random_range(1..=4), rng.random_range(1..=4));
    let k = rng.random_range(2..=5);
    let x = random_tensor(Shape::new(n, c, h, w), rng);
    let wt = random_tensor(Shape::new(o, c, k, k), rng);
    let b = random_tensor(Shape::vector(1, o), rng);
    probe(
        vec![("x", x), ("w", wt), ("b", b)],
        Box::new(|t| upconv2d(&t[0], &t[1], &t[2])),
        Box::new(|t, r| {
            let g = upconv2d_backward(&t[0], &t[1], r, true)?;
            Ok(vec![g.input.unwrap(), g.weights, g.bias])
        }),
        rng,
    )
}

fn fc_instance(rng: &mut SeededRng) -> GradCheckReport {
    let n = rng.random_range(1..=2);
    let (c, h, w) = (
        rng.random_range(1..=4),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
    );
    let out = rng.random_range(1..=6);
    let x = random_tensor(Shape::new(n, c, h, w), rng);
    let wt = random_tensor(Shape::new(out, c * h * w, 1, 1), rng);
    let b = random_tensor(Shape::vector(1, out), rng);
    probe(
        vec![("x", x), ("w", wt), ("b", b)],
        Box::new(|t| fully_connected(&t[0], &t[1], &t[2])),
        Box::new(|t, r| {
            let g = fully_connected_backward(&t[0], &t[1], r, true)?;
            Ok(vec![g.input.unwrap(), g.weights, g.bias])
        }),
        rng,
    )
}

fn random_shape(rng: &mut SeededRng) -> Shape {
    Shape::new(
        rng.random_range(1..=2),
        rng.random_range(1..=4),
        rng.random_range(1..=8),
        rng.random_range(1..=8),
    )
}

fn leaky_instance(rng: &mut SeededRng) -> GradCheckReport {
    let shape = random_shape(rng);
    let slope: f64 = rng.random_range(0.0..1.0);
    // Keep every input at least 1e-3 away from the kink.
    let x = random_tensor::<f64>(shape, rng).map(|v| {
        if v.abs() < 1e-3 {
            v.signum() * 1e-3 + v
        } else {
            v
        }
    });
    probe(
        vec![("x", x)],
        Box::new(move |t| Ok(leaky_relu(&t[0], slope))),
        Box::new(move |t, r| Ok(vec![leaky_relu_backward(&t[0], slope, r)?])),
        rng,
    )
}

fn pool_instance(rng: &mut SeededRng) -> GradCheckReport {
    let window = rng.random_range(1..=3);
    let stride = rng.random_range(1..=3);
    let shape = Shape::new(
        rng.random_range(1..=2),
        rng.random_range(1..=3),
        rng.random_range(window..=8),
        rng.random_range(window..=8),
    );
    // Distinct values 0.01 apart keep every argmax stable under ±h.
    let mut order: Vec<usize> = (0..shape.len()).collect();
    order.shuffle(rng);
    let x = Tensor::from_vec(
        shape,
        order.iter().map(|&i| i as f64 * 0.01 - 0.3).collect(),
    )
    .unwrap();
    probe(
        vec![("x", x)],
        Box::new(move |t| Ok(max_pool2d(&t[0], window, stride)?.output)),
        Box::new(move |t, r| {
            let p = max_pool2d(&t[0], window, stride)?;
            Ok(vec![max_pool2d_backward(t[0].shape(), &p.argmax, r)?])
        }),
        rng,
    )
}

fn concat_instance(rng: &mut SeededRng) -> GradCheckReport {
    let s = random_shape(rng);
    let c2 = rng.random_range(0..=3);
    let a = random_tensor(s, rng);
    let b = random_tensor(Shape::new(s.n(), c2, s.h(), s.w()), rng);
    let c1 = s.c();
    probe(
        vec![("a", a), ("b", b)],
        Box::new(|t| concat_channels(&t[0], &t[1])),
        Box::new(move |_, r| {
            let (ga, gb) = split_channels(r, c1)?;
            Ok(vec![ga, gb])
        }),
        rng,
    )
}

fn upsample_instance(rng: &mut SeededRng) -> GradCheckReport {
    let x = random_tensor(random_shape(rng), rng);
    probe(
        vec![("x", x)],
        Box::new(|t| Ok(upsample2x_zero_stuff(&t[0]))),
        Box::new(|_, r| Ok(vec![upsample2x_zero_stuff_backward(r)?])),
        rng,
    )
}

fn mse_instance(rng: &mut SeededRng) -> GradCheckReport {
    let s = random_shape(rng);
    let p: Tensor<f64> = random_tensor(s, rng);
    let t: Tensor<f64> = random_tensor(s, rng);
    let mut objective = FnObjective::new(
        vec![
            ("prediction".into(), p.into_data()),
            ("target".into(), t.into_data()),
        ],
        move |v| {
            let ts = rebuild(&[s, s], v);
            mse_loss(&ts[0], &ts[1])
        },
        move |v| {
            let ts = rebuild(&[s, s], v);
            let g = mse_loss_grad(&ts[0], &ts[1])?;
            let neg = g.map(|x| -x);
            Ok(vec![g.into_data(), neg.into_data()])
        },
    );
    finite_difference_check(&mut objective, &GradCheckOptions::default()).unwrap()
}

fn network_check(
    network: Network<f64>,
    rng: &mut SeededRng,
    entries: Option<usize>,
) -> GradCheckReport {
    let (c, h, w) = network.spec().input_shape();
    let (oc, oh, ow) = network.spec().output_shape();
    let input = random_tensor(Shape::new(2, c, h, w), rng);
    let target = random_tensor(Shape::new(2, oc, oh, ow), rng);
    let mut objective = NetworkObjective::new(network, input, target, true);
    let options = GradCheckOptions {
        max_entries_per_tensor: entries,
        ..GradCheckOptions::default()
    };
    finite_difference_check(&mut objective, &options).unwrap()
}

/// A small dense-to-image network: dense layers, leaky ReLUs, a reshape
/// and an up-convolution.
fn fc_net_instance(rng: &mut SeededRng) -> GradCheckReport {
    let spec = fc_inversion_net(6, 64, 2).unwrap();
    let net = Network::init(spec, rng).cast::<f64>();
    network_check(net, rng, Some(24))
}

/// The toy encoder on a 16×16 image: convolutions, ReLUs, max-pooling and
/// dense layers.
fn encoder_instance(rng: &mut SeededRng) -> GradCheckReport {
    let spec = build_toy_encoder((3, 16, 16), 3).unwrap().network;
    let net = Network::init(spec, rng).cast::<f64>();
    network_check(net, rng, Some(12))
}

pub struct OpResult {
    pub name: &'static str,
    pub instances: usize,
    pub report: GradCheckReport,
}

impl OpResult {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

/// Runs `instances` random cases of every operation, plus a few small
/// networks that exercise reshape and the layer plumbing.
pub fn op_suite(instances: usize) -> Vec<OpResult> {
    let cases: [(&'static str, fn(&mut SeededRng) -> GradCheckReport, usize); 10] = [
        ("conv2d", conv_instance, instances),
        ("upconv2d", upconv_instance, instances),
        ("fully_connected", fc_instance, instances),
        ("leaky_relu", leaky_instance, instances),
        ("max_pool2d", pool_instance, instances),
        ("concat_channels", concat_instance, instances),
        ("upsample2x_zero_stuff", upsample_instance, instances),
        ("mse_loss", mse_instance, instances),
        ("dense network with reshape", fc_net_instance, 3),
        ("toy encoder network", encoder_instance, 2),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(op, &(name, f, count))| {
            let mut report = GradCheckReport::default();
            for i in 0..count {
                let mut rng = seeded(1000 * op as u64 + i as u64);
                merge(&mut report, f(&mut rng));
            }
            OpResult {
                name,
                instances: count,
                report,
            }
        })
        .collect()
}

/// The complete HOG inversion graph at 1/8 width on a 32×32 cell grid,
/// checking `entries` strided entries of every tensor and of the input.
pub fn hog_net_check(entries: usize) -> GradCheckReport {
    let mut rng = seeded(31);
    let spec = hog_net((32, 32), 8).unwrap();
    assert_eq!(spec.input_shape().0, HOG_CHANNELS);
    let net = Network::init(spec, &mut rng).cast::<f64>();
    let (c, h, w) = net.spec().input_shape();
    let (oc, oh, ow) = net.spec().output_shape();
    let input = random_tensor::<f64>(Shape::new(1, c, h, w), &mut rng).map(|v| v.abs() * 0.4);
    // A target near the output keeps the loss, and with it the rounding
    // error of the difference quotient, small.
    let output = net.predict(&input).unwrap();
    let noise: Tensor<f64> = random_tensor(Shape::new(1, oc, oh, ow), &mut rng);
    let target = Tensor::from_vec(
        output.shape(),
        output
            .data()
            .iter()
            .zip(noise.data())
            .map(|(y, e)| y + 0.01 * e)
            .collect(),
    )
    .unwrap();
    let mut objective = NetworkObjective::new(net, input, target, true);
    let options = GradCheckOptions {
        max_entries_per_tensor: Some(entries),
        ..GradCheckOptions::default()
    };
    finite_difference_check(&mut objective, &options).unwrap()
}

/// Convolution whose weight gradient is read one kernel column off; the
/// checker must reject it.
pub fn corrupted_conv_check() -> GradCheckReport {
    let mut rng = seeded(77);
    let x = random_tensor(Shape::new(1, 2, 6, 6), &mut rng);
    let wt = random_tensor(Shape::new(2, 2, 3, 3), &mut rng);
    let b = random_tensor(Shape::vector(1, 2), &mut rng);
    let pad = Padding::same(3);
    probe(
        vec![("x", x), ("w", wt), ("b", b)],
        Box::new(move |t| conv2d(&t[0], &t[1], &t[2], 1, pad)),
        Box::new(move |t, r| {
            let g = conv2d_backward(&t[0], &t[1], 1, pad, r, true)?;
            let mut dw = g.weights.into_data();
            dw.rotate_left(1);
            Ok(vec![
                g.input.unwrap(),
                Tensor::from_vec(t[1].shape(), dw)?,
                g.bias,
            ])
        }),
        &mut rng,
    )
}
