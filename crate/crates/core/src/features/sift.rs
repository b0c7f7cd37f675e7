//! A Lowe-style SIFT detector and descriptor.
//!
//! Difference-of-Gaussian extrema are located over octaves starting at the
//! input resolution, refined by a quadratic fit, filtered by contrast and by
//! the principal-curvature ratio, assigned one dominant orientation and
//! described by a 4×4×8 gradient histogram.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{check_min, gray_dims};
use crate::error::{Axis, Result};
use crate::tensor::Tensor;

use super::SIFT_DESCRIPTOR_LEN;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    /// Radians in [-π, π).
    pub orientation: f64,
    pub descriptor: [f32; SIFT_DESCRIPTOR_LEN],
}

pub type KeypointSet = Vec<Keypoint>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiftOptions {
    pub levels_per_octave: usize,
    pub sigma0: f64,
    /// Blur already present in the input image.
    pub initial_blur: f64,
    /// Rejects refined extrema with `|D| · levels < contrast_threshold`.
    pub contrast_threshold: f64,
    pub edge_ratio: f64,
    /// Octaves stop once the short side drops below this many pixels.
    pub min_octave_size: usize,
}

impl Default for SiftOptions {
    fn default() -> Self {
        SiftOptions {
            levels_per_octave: 3,
            sigma0: 1.6,
            initial_blur: 0.5,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            min_octave_size: 16,
        }
    }
}

#[derive(Clone, Debug)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.at(x, y)
    }

    fn blur(&self, sigma: f64) -> Plane {
        let r = (4.0 * sigma).ceil().max(1.0) as isize;
        let mut k: Vec<f64> = (-r..=r)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        let mut tmp = vec![0.0; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                tmp[y * self.w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * self.clamped(x as isize + i as isize - r, y as isize))
                    .sum();
            }
        }
        let tmp = Plane {
            w: self.w,
            h: self.h,
            data: tmp,
        };
        let mut out = vec![0.0; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                out[y * self.w + x] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * tmp.clamped(x as isize, y as isize + i as isize - r))
                    .sum();
            }
        }
        Plane {
            w: self.w,
            h: self.h,
            data: out,
        }
    }

    fn downsample(&self) -> Plane {
        let w = self.w / 2;
        let h = self.h / 2;
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| self.at(2 * x, 2 * y))
            .collect();
        Plane { w, h, data }
    }

    fn sub(&self, other: &Plane) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Centered gradient (dx, dy) at an interior pixel.
    fn gradient(&self, x: usize, y: usize) -> (f64, f64) {
        (
            self.at(x + 1, y) - self.at(x - 1, y),
            self.at(x, y + 1) - self.at(x, y - 1),
        )
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-15 {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = super::rem_euclid(a + PI, 2.0 * PI) - PI;
    if a >= PI {
        a -= 2.0 * PI;
    }
    a
}

struct Octave {
    gauss: Vec<Plane>,
    dog: Vec<Plane>,
}

/// Detects and describes keypoints in a (1, 1, H, W) grayscale image.
pub fn sift_detect_describe(gray: &Tensor<f32>, options: &SiftOptions) -> Result<KeypointSet> {
    let (w, h) = gray_dims("sift_detect_describe", gray)?;
    check_min("sift_detect_describe", Axis::Width, 32, w)?;
    check_min("sift_detect_describe", Axis::Height, 32, h)?;
    let s = options.levels_per_octave.max(1);
    let k = 2f64.powf(1.0 / s as f64);
    let input = Plane {
        w,
        h,
        data: gray.data().iter().map(|&v| v as f64).collect(),
    };
    let pre = (options.sigma0.powi(2) - options.initial_blur.powi(2))
        .max(0.01)
        .sqrt();
    let mut base = input.blur(pre);
    let mut keypoints = Vec::new();
    let mut octave = 0i32;
    while base.w.min(base.h) >= options.min_octave_size.max(8) {
        let mut gauss = vec![base.clone()];
        for i in 1..s + 3 {
            let prev = options.sigma0 * k.powi(i as i32 - 1);
            let total = prev * k;
            let g = gauss[i - 1].blur((total * total - prev * prev).sqrt());
            gauss.push(g);
        }
        let dog: Vec<Plane> = gauss.windows(2).map(|p| p[1].sub(&p[0])).collect();
        let oct = Octave { gauss, dog };
        detect_octave(&oct, octave, s, options, (w, h), &mut keypoints);
        base = oct.gauss[s].downsample();
        octave += 1;
    }
    Ok(keypoints)
}

fn detect_octave(
    oct: &Octave,
    octave: i32,
    s: usize,
    options: &SiftOptions,
    size: (usize, usize),
    out: &mut KeypointSet,
) {
    let (w, h) = (oct.dog[0].w, oct.dog[0].h);
    let prelim = 0.5 * options.contrast_threshold / s as f64;
    for layer in 1..=s {
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let v = oct.dog[layer].at(x, y);
                if v.abs() <= prelim || !is_extremum(&oct.dog, layer, x, y) {
                    continue;
                }
                if let Some(kp) = refine(oct, octave, s, options, size, layer, x, y) {
                    out.push(kp);
                }
            }
        }
    }
}

fn is_extremum(dog: &[Plane], layer: usize, x: usize, y: usize) -> bool {
    let v = dog[layer].at(x, y);
    let (mut max, mut min) = (true, true);
    for l in layer - 1..=layer + 1 {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if l == layer && xx == x && yy == y {
                    continue;
                }
                let n = dog[l].at(xx, yy);
                max &= v > n;
                min &= v < n;
            }
        }
        if !max && !min {
            return false;
        }
    }
    max || min
}

#[allow(clippy::too_many_arguments)]
fn refine(
    oct: &Octave,
    octave: i32,
    s: usize,
    options: &SiftOptions,
    (img_w, img_h): (usize, usize),
    mut layer: usize,
    mut x: usize,
    mut y: usize,
) -> Option<Keypoint> {
    let (w, h) = (oct.dog[0].w, oct.dog[0].h);
    let mut offset = [0.0; 3];
    let mut converged = false;
    let mut grad = [0.0; 3];
    for _ in 0..5 {
        let d = |l: usize, dx: isize, dy: isize| {
            oct.dog[l].at((x as isize + dx) as usize, (y as isize + dy) as usize)
        };
        let v = d(layer, 0, 0);
        grad = [
            (d(layer, 1, 0) - d(layer, -1, 0)) * 0.5,
            (d(layer, 0, 1) - d(layer, 0, -1)) * 0.5,
            (d(layer + 1, 0, 0) - d(layer - 1, 0, 0)) * 0.5,
        ];
        let dxx = d(layer, 1, 0) + d(layer, -1, 0) - 2.0 * v;
        let dyy = d(layer, 0, 1) + d(layer, 0, -1) - 2.0 * v;
        let dss = d(layer + 1, 0, 0) + d(layer - 1, 0, 0) - 2.0 * v;
        let dxy = (d(layer, 1, 1) - d(layer, -1, 1) - d(layer, 1, -1) + d(layer, -1, -1)) * 0.25;
        let dxs = (d(layer + 1, 1, 0) - d(layer + 1, -1, 0) - d(layer - 1, 1, 0)
            + d(layer - 1, -1, 0))
            * 0.25;
        let dys = (d(layer + 1, 0, 1) - d(layer + 1, 0, -1) - d(layer - 1, 0, 1)
            + d(layer - 1, 0, -1))
            * 0.25;
        let hess = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
        offset = solve3(hess, [-grad[0], -grad[1], -grad[2]])?;
        if offset.iter().all(|o| o.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|o| o.abs() > (w.max(h) as f64)) {
            return None;
        }
        let nx = x as isize + offset[0].round() as isize;
        let ny = y as isize + offset[1].round() as isize;
        let nl = layer as isize + offset[2].round() as isize;
        if nl < 1
            || nl > s as isize
            || nx < 1
            || ny < 1
            || nx >= w as isize - 1
            || ny >= h as isize - 1
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
    }
    if !converged {
        return None;
    }
    let dog = &oct.dog[layer];
    let contrast =
        dog.at(x, y) + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if contrast.abs() * (s as f64) < options.contrast_threshold {
        return None;
    }
    let v = dog.at(x, y);
    let dxx = dog.at(x + 1, y) + dog.at(x - 1, y) - 2.0 * v;
    let dyy = dog.at(x, y + 1) + dog.at(x, y - 1) - 2.0 * v;
    let dxy = (dog.at(x + 1, y + 1) - dog.at(x - 1, y + 1) - dog.at(x + 1, y - 1)
        + dog.at(x - 1, y - 1))
        * 0.25;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = options.edge_ratio;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }

    let scale_factor = 2f64.powi(octave);
    let ox = x as f64 + offset[0];
    let oy = y as f64 + offset[1];
    let sigma_oct = options.sigma0 * 2f64.powf((layer as f64 + offset[2]) / s as f64);
    let kx = ox * scale_factor;
    let ky = oy * scale_factor;
    if !(kx >= 0.0 && ky >= 0.0 && kx < img_w as f64 && ky < img_h as f64) {
        return None;
    }
    let gauss = &oct.gauss[layer];
    let angle = dominant_orientation(gauss, x, y, sigma_oct)?;
    let descriptor = describe(gauss, ox, oy, sigma_oct, angle)?;
    Some(Keypoint {
        x: kx,
        y: ky,
        scale: sigma_oct * scale_factor,
        orientation: angle,
        descriptor,
    })
}

const ORI_BINS: usize = 36;

fn dominant_orientation(img: &Plane, x: usize, y: usize, sigma: f64) -> Option<f64> {
    let ws = 1.5 * sigma;
    let radius = (3.0 * ws).round() as isize;
    let mut hist = [0.0f64; ORI_BINS];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (px, py) = (x as isize + dx, y as isize + dy);
            if px < 1 || py < 1 || px >= img.w as isize - 1 || py >= img.h as isize - 1 {
                continue;
            }
            let (gx, gy) = img.gradient(px as usize, py as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * ws * ws)).exp();
            let bin = (gy.atan2(gx) / (2.0 * PI) * ORI_BINS as f64).round() as isize;
            hist[bin.rem_euclid(ORI_BINS as isize) as usize] += weight * mag;
        }
    }
    let mut smooth = [0.0; ORI_BINS];
    for (i, sm) in smooth.iter_mut().enumerate() {
        let at = |o: isize| hist[(i as isize + o).rem_euclid(ORI_BINS as isize) as usize];
        *sm = (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0;
    }
    let (best, &peak) =
        smooth.iter().enumerate().fold(
            (0, &smooth[0]),
            |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc },
        );
    if peak <= 0.0 {
        return None;
    }
    let l = smooth[(best + ORI_BINS - 1) % ORI_BINS];
    let r = smooth[(best + 1) % ORI_BINS];
    let denom = l - 2.0 * peak + r;
    let shift = if denom.abs() > 0.0 {
        0.5 * (l - r) / denom
    } else {
        0.0
    };
    Some(wrap_angle(
        (best as f64 + shift) * 2.0 * PI / ORI_BINS as f64,
    ))
}

const D: usize = 4;
const N: usize = 8;

fn describe(
    img: &Plane,
    x: f64,
    y: f64,
    sigma: f64,
    angle: f64,
) -> Option<[f32; SIFT_DESCRIPTOR_LEN]> {
    let hist_width = 3.0 * sigma;
    let diag = ((img.w * img.w + img.h * img.h) as f64).sqrt();
    let radius = (hist_width * 2f64.sqrt() * (D as f64 + 1.0) * 0.5)
        .round()
        .min(diag) as isize;
    let (sin_t, cos_t) = angle.sin_cos();
    let (cx, cy) = (x.round() as isize, y.round() as isize);
    let mut hist = [0.0f64; (D + 2) * (D + 2) * (N + 2)];
    let idx = |r: usize, c: usize, o: usize| (r * (D + 2) + c) * (N + 2) + o;
    for i in -radius..=radius {
        for j in -radius..=radius {
            let (px, py) = (cx + j, cy + i);
            if px < 1 || py < 1 || px >= img.w as isize - 1 || py >= img.h as isize - 1 {
                continue;
            }
            // Offset of the sample from the subpixel center, rotated into the keypoint frame.
            let (fx, fy) = (px as f64 - x, py as f64 - y);
            let c_rot = (fx * cos_t + fy * sin_t) / hist_width;
            let r_rot = (-fx * sin_t + fy * cos_t) / hist_width;
            let rbin = r_rot + D as f64 / 2.0 - 0.5;
            let cbin = c_rot + D as f64 / 2.0 - 0.5;
            if rbin <= -1.0 || cbin <= -1.0 || rbin >= D as f64 || cbin >= D as f64 {
                continue;
            }
            let (gx, gy) = img.gradient(px as usize, py as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let weight =
                (-(c_rot * c_rot + r_rot * r_rot) / (2.0 * (0.5 * D as f64).powi(2))).exp();
            let obin = super::rem_euclid(gy.atan2(gx) - angle, 2.0 * PI) * N as f64 / (2.0 * PI);

            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (dr, dc, dob) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = ((r0 + 1.0) as usize, (c0 + 1.0) as usize);
            let o0 = (o0 as usize) % N;
            let v = mag * weight;
            for (rr, wr) in [(0, 1.0 - dr), (1, dr)] {
                for (cc, wc) in [(0, 1.0 - dc), (1, dc)] {
                    for (oo, wo) in [(0, 1.0 - dob), (1, dob)] {
                        hist[idx(r0 + rr, c0 + cc, o0 + oo)] += v * wr * wc * wo;
                    }
                }
            }
        }
    }
    let mut desc = [0.0f64; SIFT_DESCRIPTOR_LEN];
    for r in 0..D {
        for c in 0..D {
            for o in 0..N + 2 {
                // Orientation bin N wraps to 0 (bin N + 1 is never written).
                desc[(r * D + c) * N + o % N] += hist[idx(r + 1, c + 1, o)];
            }
        }
    }
    normalize_clamped(&mut desc)?;
    let mut out = [0.0f32; SIFT_DESCRIPTOR_LEN];
    for (o, d) in out.iter_mut().zip(&desc) {
        *o = *d as f32;
    }
    Some(out)
}

/// Unit-normalizes, then alternates clamping at 0.2 and renormalizing until
/// both hold. `None` when that is impossible (fewer than 25 non-zero bins).
fn normalize_clamped(v: &mut [f64]) -> Option<()> {
    const CLAMP: f64 = 0.2;
    for _ in 0..64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if v.iter().all(|&x| x <= CLAMP + 1e-9) {
            v.iter_mut().for_each(|x| *x = x.min(CLAMP));
            return Some(());
        }
        v.iter_mut().for_each(|x| *x = x.min(CLAMP));
    }
    None
}
