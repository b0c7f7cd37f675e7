//! Image folders: flat directories or one subdirectory per class.

use std::fs;
use std::path::{Path, PathBuf};

use invertkit_core::train::split_indices;
use invertkit_core::Tensor;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::{is_image_path, load_resized};

/// Fewest decodable images a training dataset may hold.
pub const MIN_IMAGES: usize = 4;

#[derive(Clone, Debug)]
pub struct Dataset {
    /// (1, 3, H, W) images in [0, 1], sorted by relative path.
    pub images: Vec<Tensor<f32>>,
    /// Paths relative to the dataset root.
    pub names: Vec<String>,
    /// Class index per image; all zero for a flat directory.
    pub labels: Vec<usize>,
    /// Class names (subdirectory names), or empty for a flat directory.
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            names: indices.iter().map(|&i| self.names[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Deterministic (train, test) split.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let (train, test) = split_indices(self.len(), train_fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// Image files directly under `dir` and under its immediate subdirectories,
/// as (path, class name) pairs in sorted order.
pub fn list_images(dir: &Path) -> Result<Vec<(PathBuf, Option<String>)>> {
    if !dir.is_dir() {
        return Err(Error::Usage(format!(
            "dataset path {} is not a directory",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for entry in sorted_entries(dir)? {
        if entry.is_dir() {
            let class = entry.file_name().unwrap().to_string_lossy().into_owned();
            for file in sorted_entries(&entry)? {
                if file.is_file() && is_image_path(&file) {
                    out.push((file, Some(class.clone())));
                }
            }
        } else if is_image_path(&entry) {
            out.push((entry, None));
        }
    }
    Ok(out)
}

/// Decodes every image under `dir`, resized to `size` = (width, height).
/// Files that fail to decode are skipped with a warning.
pub fn load_images(dir: &Path, size: Option<(usize, usize)>) -> Result<Dataset> {
    let files = list_images(dir)?;
    let decoded: Vec<_> = files
        .par_iter()
        .map(|(path, _)| load_resized(path, size))
        .collect();
    let mut classes: Vec<String> = files.iter().filter_map(|(_, c)| c.clone()).collect();
    classes.sort();
    classes.dedup();
    let mut ds = Dataset {
        images: Vec::new(),
        names: Vec::new(),
        labels: Vec::new(),
        classes,
    };
    for ((path, class), img) in files.iter().zip(decoded) {
        match img {
            Ok(img) => {
                ds.images.push(img);
                let rel = path.strip_prefix(dir).unwrap_or(path);
                ds.names.push(rel.to_string_lossy().replace('\\', "/"));
                let label = class
                    .as_ref()
                    .map_or(0, |c| ds.classes.binary_search(c).unwrap());
                ds.labels.push(label);
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    Ok(ds)
}

/// Like [`load_images`] but requires at least [`MIN_IMAGES`] usable images.
pub fn load_dataset(dir: &Path, size: (usize, usize)) -> Result<Dataset> {
    let ds = load_images(dir, Some(size))?;
    if ds.len() < MIN_IMAGES {
        return Err(Error::Dataset(format!(
            "{} holds {} usable images, need at least {MIN_IMAGES}",
            dir.display(),
            ds.len()
        )));
    }
    Ok(ds)
}
