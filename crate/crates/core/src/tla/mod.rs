//! Template-like augmentation: new (image, mask) pairs synthesised by
//! replacing mask-selected segments with pooled foreground textures, laying
//! pooled backgrounds over or under the scene, cutting segments out, and
//! exchanging segment contents, followed by classic photometric/geometric
//! augmentation.
//!
//! All randomness flows from a single 64-bit seed through [`TlaRng`]
//! (ChaCha8). Each pipeline step draws its own sub-seed from the master
//! stream, and the sub-seed is written to the transform log.

mod classic;
mod ops;
mod pipeline;
mod pool;

use std::path::PathBuf;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::imagery::{GrayMask, ImageryError, RasterImage};

pub use crate::labeling::{connected_components, Segment};
pub use classic::{classic_augment, rotate_pair, ClassicSettings};
pub use ops::{
    apply_background_bottom, apply_background_bottom_at, apply_background_top, cover_crop, cutout_segment,
    mixup_segments, sample_bottom_placement, swap_foreground, BottomPlacement,
};
pub use pipeline::{augment, augment_dataset, AugmentationConfig, Manifest, ManifestRecord, GENERATOR};
pub use pool::{load_pool, Sample, SamplePool};

/// Seedable, portable generator used for every random choice.
pub type TlaRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TlaRng {
    TlaRng::seed_from_u64(seed)
}

#[derive(Debug, Error)]
pub enum TlaError {
    #[error(transparent)]
    Imagery(#[from] ImageryError),
    #[error("sample pool at {0} contains no usable images")]
    EmptyPool(PathBuf),
    #[error("no {0} samples in the pool")]
    MissingSamples(String),
    #[error("class {0:?} is not in the label map")]
    UnknownClass(String),
    #[error("segment does not belong to this mask")]
    SegmentMismatch,
    #[error("mix-up needs two distinct segments")]
    SameSegment,
    #[error("mix-up segments have different classes ({0} vs {1})")]
    ClassMismatch(u8, u8),
    #[error("image is {image:?} but mask is {mask:?}")]
    DimensionMismatch { image: (u32, u32), mask: (u32, u32) },
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = TlaError> = std::result::Result<T, E>;

/// One applied transform, as recorded in the transform log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    ForegroundSwap { class: String, segment: usize, bbox: BoundingBox, sample: String, seed: u64 },
    Cutout { class: String, segment: usize, bbox: BoundingBox, sample: String },
    Mixup { class: String, segments: [usize; 2], seed: u64 },
    BackgroundTop { sample: String, seed: u64 },
    BackgroundBottom { sample: String, seed: u64, scale: f64, offset: [u32; 2], canvas: [u32; 2] },
    HorizontalFlip,
    VerticalFlip,
    Rotate { degrees: f64 },
    GaussianNoise { sigma: f64, seed: u64 },
    ColorJitter { factors: [f64; 3] },
    Resize { width: u32, height: u32 },
}

/// An image with its mask and the transforms that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPair {
    pub image: RasterImage,
    pub mask: GrayMask,
    pub transforms: Vec<Transform>,
}

impl AugmentedPair {
    pub fn new(image: RasterImage, mask: GrayMask) -> Result<Self> {
        if image.dimensions() != mask.dimensions() {
            return Err(TlaError::DimensionMismatch { image: image.dimensions(), mask: mask.dimensions() });
        }
        Ok(Self { image, mask, transforms: Vec::new() })
    }
}

pub(crate) fn check_pair(image: &RasterImage, mask: &GrayMask) -> Result<()> {
    if image.dimensions() != mask.dimensions() {
        return Err(TlaError::DimensionMismatch { image: image.dimensions(), mask: mask.dimensions() });
    }
    Ok(())
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TlaError::InvalidConfig(format!("{name} probability {p} is outside [0, 1]")))
    }
}
