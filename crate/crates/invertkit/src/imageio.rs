//! PNG/PPM decoding, PNG encoding and montages.

use std::fs;
use std::path::Path;

use image::{ImageReader, Rgb, RgbImage};
use invertkit_core::image::{clamp_unit, resize_bilinear};
use invertkit_core::{Shape, Tensor};

use crate::error::{Error, Result};

/// Black gutter between montage tiles, in pixels.
pub const GUTTER: usize = 4;

/// File extensions the loader attempts to decode.
pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Decodes a PNG or PPM file into a (1, 3, H, W) tensor with values in [0, 1].
pub fn load_image(path: &Path) -> Result<Tensor<f32>> {
    let img_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| img_err(e.to_string()))?;
    let rgb = img.to_rgb32f();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(img_err("empty image".into()));
    }
    Ok(Tensor::from_fn(Shape::new(1, 3, h, w), |[_, c, y, x]| {
        rgb.get_pixel(x as u32, y as u32)[c]
    }))
}

/// Loads and bilinearly resizes to `size` = (width, height) when given.
pub fn load_resized(path: &Path, size: Option<(usize, usize)>) -> Result<Tensor<f32>> {
    let img = load_image(path)?;
    match size {
        Some((w, h)) if (img.shape().w(), img.shape().h()) != (w, h) => {
            Ok(resize_bilinear(&img, h, w)?)
        }
        _ => Ok(img),
    }
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Converts a (1, C, H, W) tensor in [0, 1] with C = 1 or 3 to 8-bit RGB.
pub fn to_rgb(image: &Tensor<f32>) -> RgbImage {
    let s = image.shape();
    RgbImage::from_fn(s.w() as u32, s.h() as u32, |x, y| {
        let at = |c: usize| to_byte(image.at(0, c.min(s.c() - 1), y as usize, x as usize));
        Rgb([at(0), at(1), at(2)])
    })
}

pub fn save_png(path: &Path, image: &Tensor<f32>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    to_rgb(&clamp_unit(image))
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Tiles rows of images on a black canvas: one row per entry, tiles left to
/// right, `GUTTER` pixels between tiles and between rows. Tiles within a
/// column share the widest tile's width; rows share their tallest height.
pub fn montage(rows: &[Vec<Tensor<f32>>]) -> Tensor<f32> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let col_w: Vec<usize> = (0..cols)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|t| t.shape().w())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let row_h: Vec<usize> = rows
        .iter()
        .map(|r| r.iter().map(|t| t.shape().h()).max().unwrap_or(0))
        .collect();
    let gaps = |n: usize| n.saturating_sub(1) * GUTTER;
    let width = col_w.iter().sum::<usize>() + gaps(cols);
    let height = row_h.iter().sum::<usize>() + gaps(rows.len());
    let mut out = Tensor::zeros(Shape::new(1, 3, height.max(1), width.max(1)));
    let mut top = 0;
    for (row, &rh) in rows.iter().zip(&row_h) {
        let mut left = 0;
        for (tile, &cw) in row.iter().zip(&col_w) {
            let s = tile.shape();
            for c in 0..3 {
                for y in 0..s.h() {
                    for x in 0..s.w() {
                        *out.at_mut(0, c, top + y, left + x) = tile.at(0, c.min(s.c() - 1), y, x);
                    }
                }
            }
            left += cw + GUTTER;
        }
        top += rh + GUTTER;
    }
    out
}
