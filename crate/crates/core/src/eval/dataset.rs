use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{PisaError, Result};
use crate::imaging::load_gray;

use super::metrics::binarize_mask;

/// Where images and masks live under a dataset root and how they are paired.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetLayout {
    /// Image directory relative to the root.
    pub image_dir: PathBuf,
    /// Mask directory relative to the root.
    pub mask_dir: PathBuf,
    /// Accepted image extensions, lowercase, without the dot.
    pub image_extensions: Vec<String>,
    /// Appended to an image stem to form its mask file name.
    pub mask_suffix: String,
}

impl Default for DatasetLayout {
    fn default() -> Self {
        Self {
            image_dir: PathBuf::from("."),
            mask_dir: PathBuf::from("."),
            image_extensions: ["jpg", "jpeg", "bmp", "ppm"].map(String::from).to_vec(),
            mask_suffix: ".png".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub name: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

fn check_entry(name: &str, image_path: &Path, mask_path: &Path) -> Result<DatasetEntry> {
    let (iw, ih) = image::image_dimensions(image_path).map_err(|source| PisaError::Image {
        path: image_path.to_path_buf(),
        source,
    })?;
    let mask = load_gray(mask_path)?;
    if (mask.width(), mask.height()) != (iw as usize, ih as usize) {
        return Err(PisaError::invalid(format!(
            "mask is {}x{} but image is {iw}x{ih}",
            mask.width(),
            mask.height()
        )));
    }
    let mask = binarize_mask(mask.data());
    if !mask.iter().any(|&m| m) {
        return Err(PisaError::invalid("ground-truth mask is empty"));
    }
    Ok(DatasetEntry {
        name: name.to_string(),
        image_path: image_path.to_path_buf(),
        mask_path: mask_path.to_path_buf(),
        width: iw as usize,
        height: ih as usize,
        mask,
    })
}

/// Pairs every image with its mask, sorted by name. Entries with a missing, unreadable,
/// empty or mismatched mask are skipped with a warning.
pub fn load_dataset(root: impl AsRef<Path>, layout: &DatasetLayout) -> Result<Vec<DatasetEntry>> {
    let root = root.as_ref();
    let image_dir = root.join(&layout.image_dir);
    let mask_dir = root.join(&layout.mask_dir);
    let listing = std::fs::read_dir(&image_dir).map_err(|e| PisaError::io(&image_dir, e))?;

    let mut images: Vec<(String, PathBuf)> = Vec::new();
    for item in listing {
        let path = item.map_err(|e| PisaError::io(&image_dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let accepted = ext.is_some_and(|e| layout.image_extensions.contains(&e));
        if !accepted || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            images.push((stem.to_string(), path));
        }
    }
    images.sort();

    let mut entries = Vec::with_capacity(images.len());
    for (name, image_path) in images {
        let mask_path = mask_dir.join(format!("{name}{}", layout.mask_suffix));
        if !mask_path.is_file() {
            warn!("{}: no mask at {}", name, mask_path.display());
            continue;
        }
        match check_entry(&name, &image_path, &mask_path) {
            Ok(e) => entries.push(e),
            Err(e) => warn!("{name}: skipped: {e}"),
        }
    }
    if entries.is_empty() {
        return Err(PisaError::EmptyDataset(root.to_path_buf()));
    }
    Ok(entries)
}
