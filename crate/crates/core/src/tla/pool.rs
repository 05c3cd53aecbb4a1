use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Result, TlaError};
use crate::imagery::{self, LabelMap, RasterImage};

/// A replacement texture and the identifier (path relative to the pool root)
/// it is logged under.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub image: RasterImage,
}

/// Foreground samples per class name and background samples.
///
/// On disk:
///
/// ```text
/// <root>/foreground/<class-name>/*.{png,jpg}
/// <root>/background/*.{png,jpg}
/// ```
#[derive(Debug, Clone, Default)]
pub struct SamplePool {
    pub foregrounds: BTreeMap<String, Vec<Sample>>,
    pub backgrounds: Vec<Sample>,
    /// Skipped folders and undecodable files found while loading.
    pub warnings: Vec<String>,
}

impl SamplePool {
    pub fn foreground(&self, class: &str) -> &[Sample] {
        self.foregrounds.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.backgrounds.is_empty() && self.foregrounds.values().all(Vec::is_empty)
    }
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| imagery::is_image_file(p))
        .collect();
    files.sort();
    Ok(files)
}

fn load_samples(root: &Path, dir: &Path, warnings: &mut Vec<String>) -> Result<Vec<Sample>> {
    let loaded: Vec<_> = image_files(dir)?
        .into_par_iter()
        .map(|path| {
            let id = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            imagery::load_image(&path).map(|image| Sample { id, image }).map_err(|e| e.to_string())
        })
        .collect();
    let mut samples = Vec::with_capacity(loaded.len());
    for item in loaded {
        match item {
            Ok(s) => samples.push(s),
            Err(e) => warnings.push(format!("skipped sample: {e}")),
        }
    }
    Ok(samples)
}

/// Indexes every decodable image under `root`. Class folders absent from
/// `labels` are skipped with a warning.
pub fn load_pool(root: impl AsRef<Path>, labels: &LabelMap) -> Result<SamplePool> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(TlaError::Imagery(imagery::ImageryError::FileNotFound(root.to_path_buf())));
    }
    let mut pool = SamplePool::default();
    let fg_root = root.join("foreground");
    if fg_root.is_dir() {
        let mut class_dirs: Vec<PathBuf> =
            fs::read_dir(&fg_root)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        class_dirs.sort();
        for dir in class_dirs {
            let name = dir.file_name().map(|n| n.to_string_lossy().trim().to_string()).unwrap_or_default();
            if labels.get(&name).is_none() {
                pool.warnings.push(format!("foreground/{name}: class not in label map, folder skipped"));
                continue;
            }
            let samples = load_samples(root, &dir, &mut pool.warnings)?;
            if !samples.is_empty() {
                pool.foregrounds.insert(name, samples);
            }
        }
    }
    let bg_root = root.join("background");
    if bg_root.is_dir() {
        pool.backgrounds = load_samples(root, &bg_root, &mut pool.warnings)?;
    }
    if pool.is_empty() {
        return Err(TlaError::EmptyPool(root.to_path_buf()));
    }
    Ok(pool)
}
