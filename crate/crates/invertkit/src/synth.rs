//! Procedural image corpus: ten shape classes on graded backgrounds, used in
//! place of a natural-image collection for desk-scale runs.

use std::path::Path;

use invertkit_core::rng::{stream, Rng};
use invertkit_core::{Shape, Tensor};
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::Result;
use crate::imageio::save_png;

pub const CLASSES: [&str; 10] = [
    "disc", "square", "triangle", "ring", "cross", "diamond", "hbars", "vbars", "checker", "ellipse",
];

/// Base hue per class in [0, 1).
fn class_hue(class: usize) -> f32 {
    class as f32 / CLASSES.len() as f32
}

fn hsv(h: f32, s: f32, v: f32) -> [f32; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let i = h.floor() as i32;
    let f = h - i as f32;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Whether the point (u, v), in shape-local coordinates scaled to [-1, 1],
/// lies inside the shape of `class`.
fn inside(class: usize, u: f32, v: f32) -> bool {
    let r2 = u * u + v * v;
    match class {
        0 => r2 <= 1.0,
        1 => u.abs() <= 0.8 && v.abs() <= 0.8,
        2 => v <= 0.8 && u.abs() <= (v + 0.9) / 1.7 * 0.95,
        3 => (0.45..=1.0).contains(&r2),
        4 => (u.abs() <= 0.25 && v.abs() <= 0.9) || (v.abs() <= 0.25 && u.abs() <= 0.9),
        5 => u.abs() + v.abs() <= 0.95,
        6 => u.abs() <= 0.9 && v.abs() <= 0.9 && ((v + 1.0) * 2.5).floor() as i32 % 2 == 0,
        7 => u.abs() <= 0.9 && v.abs() <= 0.9 && ((u + 1.0) * 2.5).floor() as i32 % 2 == 0,
        8 => {
            u.abs() <= 0.9
                && v.abs() <= 0.9
                && (((u + 1.0) * 2.0).floor() as i32 + ((v + 1.0) * 2.0).floor() as i32) % 2 == 0
        }
        _ => u * u + (v / 0.55).powi(2) <= 1.0,
    }
}

/// One `size`×`size` image of `class`.
pub fn render(class: usize, size: usize, rng: &mut Rng) -> Tensor<f32> {
    let top = hsv(rng.random(), rng.random_range(0.1..0.4), rng.random_range(0.2..0.9));
    let bottom = hsv(rng.random(), rng.random_range(0.1..0.4), rng.random_range(0.2..0.9));
    let fill = hsv(
        class_hue(class) + rng.random_range(-0.03..0.03),
        rng.random_range(0.6..1.0),
        rng.random_range(0.6..1.0),
    );
    let s = size as f32;
    let radius = rng.random_range(0.22..0.4) * s;
    let cx = rng.random_range(radius..s - radius);
    let cy = rng.random_range(radius..s - radius);
    let angle: f32 = rng.random_range(-0.5..0.5);
    let (sin, cos) = angle.sin_cos();
    const SUB: usize = 4;
    Tensor::from_fn(Shape::new(1, 3, size, size), |[_, c, y, x]| {
        let t = y as f32 / (s - 1.0).max(1.0);
        let bg = top[c] * (1.0 - t) + bottom[c] * t;
        let mut hits = 0;
        for sy in 0..SUB {
            for sx in 0..SUB {
                let px = x as f32 + (sx as f32 + 0.5) / SUB as f32 - cx;
                let py = y as f32 + (sy as f32 + 0.5) / SUB as f32 - cy;
                let u = (cos * px + sin * py) / radius;
                let v = (-sin * px + cos * py) / radius;
                hits += inside(class, u, v) as usize;
            }
        }
        let a = hits as f32 / (SUB * SUB) as f32;
        bg * (1.0 - a) + fill[c] * a
    })
}

/// Writes `per_class` images of every class to `dir/<class>/<class>_NNNN.png`.
/// Image `i` of the corpus draws from its own stream of `seed`, so the output
/// does not depend on the worker count.
pub fn write_corpus(dir: &Path, per_class: usize, size: usize, seed: u64) -> Result<usize> {
    let jobs: Vec<(usize, usize)> = (0..CLASSES.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(k, &(class, i))| {
            let img = render(class, size, &mut stream(seed, k as u64));
            let name = CLASSES[class];
            save_png(&dir.join(name).join(format!("{name}_{i:04}.png")), &img)
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(jobs.len())
}
