//! Core box image toolkit.
//!
//! * [`imagery`]: image/mask/label types, decoding, normalization, resizing.
//! * [`metrics`]: confusion counts, precision, recall, IoU, F-beta and summaries.
//! * [`tla`]: texture-level augmentation of image/mask pairs.
//! * [`extraction`]: core column detection and statistical filtering.
//! * [`depthref`]: depth assignment for extracted columns.
//! * [`export`]: column crops, CSV, report and ZIP archives.
//! * [`synth`]: deterministic synthetic core box scenes.

pub mod depthref;
pub mod export;
pub mod extraction;
pub mod geometry;
pub mod imagery;
pub mod labeling;
pub mod metrics;
pub mod synth;
pub mod tla;

pub use geometry::BoundingBox;
pub use imagery::{GrayMask, LabelMap, RasterImage};
