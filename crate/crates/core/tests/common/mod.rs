//! Independent reference implementations shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

pub mod checks;
pub mod gradients;
pub mod runs;
pub mod tables;

use invertkit_core::rng::seeded;
use invertkit_core::{Shape, Tensor};
use rand::Rng;

pub fn image(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> Tensor<f32> {
    Tensor::from_fn(Shape::new(1, 1, h, w), |[_, _, y, x]| f(x, y))
}

/// Grayscale image with values on a 1/256 grid.
pub fn random_image(w: usize, h: usize, seed: u64) -> Tensor<f32> {
    let mut rng = seeded(seed);
    let data = (0..w * h)
        .map(|_| rng.random_range(0..256) as f32 / 256.0)
        .collect();
    Tensor::from_vec(Shape::new(1, 1, h, w), data).unwrap()
}

pub fn random_tensor<T: invertkit_core::Scalar>(shape: Shape, rng: &mut impl Rng) -> Tensor<T> {
    let data = (0..shape.len())
        .map(|_| T::of(rng.random_range(-1.0..1.0)))
        .collect();
    Tensor::from_vec(shape, data).unwrap()
}

/// Zero-padded cross-correlation written as six nested loops.
pub fn naive_conv(
    x: &Tensor<f32>,
    w: &Tensor<f32>,
    b: &[f32],
    stride: usize,
    (top, left): (usize, usize),
    (out_h, out_w): (usize, usize),
) -> Tensor<f32> {
    let (xs, ws) = (x.shape(), w.shape());
    let k = ws.h();
    let mut out = Tensor::zeros(Shape::new(xs.n(), ws.n(), out_h, out_w));
    for n in 0..xs.n() {
        for o in 0..ws.n() {
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut acc = b[o] as f64;
                    for c in 0..xs.c() {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * stride + ky) as i64 - top as i64;
                                let ix = (ox * stride + kx) as i64 - left as i64;
                                if iy < 0 || ix < 0 || iy >= xs.h() as i64 || ix >= xs.w() as i64 {
                                    continue;
                                }
                                acc += x.at(n, c, iy as usize, ix as usize) as f64
                                    * w.at(o, c, ky, kx) as f64;
                            }
                        }
                    }
                    *out.at_mut(n, o, oy, ox) = acc as f32;
                }
            }
        }
    }
    out
}

/// Adam written from the textbook update, one scalar at a time.
pub struct ReferenceAdam {
    pub lr: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: i32,
}

impl ReferenceAdam {
    pub fn new(n: usize, lr: f64) -> Self {
        ReferenceAdam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        self.t += 1;
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = self.m[i] / (1.0 - b1.powi(self.t));
            let vh = self.v[i] / (1.0 - b2.powi(self.t));
            theta[i] -= self.lr * mh / (vh.sqrt() + eps);
        }
    }
}

/// Normalized error computed straight from its definition.
pub fn brute_force_error(predictions: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..targets.len() {
        for j in 0..i {
            pair_sum += dist(&targets[i], &targets[j]);
            pairs += 1;
        }
    }
    let n = pair_sum / pairs as f64;
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| dist(p, t) / n)
        .sum();
    total / targets.len() as f64
}

/// HOG written cell-by-cell: every pixel is visited for every cell, with
/// tent weights in space and in (circular) orientation.
pub fn hog_oracle(img: &[f32], w: usize, h: usize, cell: usize) -> Vec<f64> {
    let rows = h.div_ceil(cell);
    let cols = w.div_ceil(cell);
    let px = |x: i64, y: i64| {
        img[(y.clamp(0, h as i64 - 1) as usize) * w + x.clamp(0, w as i64 - 1) as usize] as f64
    };
    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    let mut hist = vec![[0.0f64; 18]; rows * cols];
    for (ci, hc) in hist.iter_mut().enumerate() {
        let (r, c) = ((ci / cols) as f64, (ci % cols) as f64);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let gx = (px(x + 1, y) - px(x - 1, y)) / 2.0;
                let gy = (px(x, y + 1) - px(x, y - 1)) / 2.0;
                let m = gx.hypot(gy);
                let ws = tent((x as f64 + 0.5) / cell as f64 - 0.5 - c)
                    * tent((y as f64 + 0.5) / cell as f64 - 0.5 - r);
                if m == 0.0 || ws == 0.0 {
                    continue;
                }
                let deg = gy.atan2(gx).to_degrees().rem_euclid(360.0);
                for (b, slot) in hc.iter_mut().enumerate() {
                    let mut d = (deg / 20.0 - b as f64).abs();
                    d = d.min(18.0 - d);
                    *slot += m * ws * tent(d);
                }
            }
        }
    }
    let energy = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
            return 0.0;
        }
        let hc = &hist[r as usize * cols + c as usize];
        (0..9).map(|o| (hc[o] + hc[o + 9]).powi(2)).sum()
    };
    let mut out = vec![0.0; 31 * rows * cols];
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            let hc = &hist[r as usize * cols + c as usize];
            let norms: Vec<f64> = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
                .iter()
                .map(|&(dy, dx)| {
                    1.0 / (energy(r, c)
                        + energy(r + dy, c)
                        + energy(r, c + dx)
                        + energy(r + dy, c + dx)
                        + 1e-4)
                        .sqrt()
                })
                .collect();
            let mut feats = Vec::with_capacity(31);
            for o in 0..18 {
                feats.push(0.5 * norms.iter().map(|n| (hc[o] * n).min(0.2)).sum::<f64>());
            }
            for o in 0..9 {
                feats.push(
                    0.5 * norms
                        .iter()
                        .map(|n| ((hc[o] + hc[o + 9]) * n).min(0.2))
                        .sum::<f64>(),
                );
            }
            for n in &norms {
                feats.push(0.2357 * (0..18).map(|o| (hc[o] * n).min(0.2)).sum::<f64>());
            }
            for (ch, v) in feats.into_iter().enumerate() {
                out[(ch * rows + r as usize) * cols + c as usize] = v;
            }
        }
    }
    out
}

/// LBP histograms with patterns classified by explicit run enumeration.
pub fn lbp_oracle(img: &[f32], w: usize, h: usize, cell: usize) -> Vec<f32> {
    let neighbours = [
        (-1i64, -1i64),
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
        (1, 0),
        (1, -1),
        (0, -1),
    ];
    let bucket_of = |bits: [bool; 8]| -> usize {
        let ones = bits.iter().filter(|b| **b).count();
        if ones == 0 || ones == 8 {
            return 56;
        }
        for start in 0..8 {
            for len in 1..8 {
                let run: Vec<bool> = (0..8).map(|i| (i + 8 - start) % 8 < len).collect();
                if run[..] == bits[..] {
                    return (len - 1) * 8 + start;
                }
            }
        }
        57
    };
    let (rows, cols) = (h.div_ceil(cell), w.div_ceil(cell));
    let mut out = vec![0.0f32; 58 * rows * cols];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let center = img[y as usize * w + x as usize];
            let mut bits = [false; 8];
            for (b, (dy, dx)) in neighbours.iter().enumerate() {
                let (nx, ny) = (x + dx, y + dy);
                let v = if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    0.0
                } else {
                    img[ny as usize * w + nx as usize]
                };
                bits[b] = v > center;
            }
            let (r, c) = (y as usize / cell, x as usize / cell);
            out[(bucket_of(bits) * rows + r) * cols + c] += 1.0;
        }
    }
    out
}

pub fn max_abs_diff(a: &[f32], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - y).abs())
        .fold(0.0, f64::max)
}
