//! Predicted core mask → filtered bounding boxes → column crops.
//!
//! Detected boxes pass through three filters in a fixed order (vertical
//! position, median-size band, global minimum width). Every rejected box is
//! recorded with the filter and thresholds that removed it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::imagery::{GrayMask, LabelMap, RasterImage};
use crate::labeling;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractionError {
    #[error("median filter needs at least one box")]
    EmptyInput,
    #[error("box {bbox} exceeds the {width}x{height} image")]
    BoxOutOfBounds { bbox: BoundingBox, width: u32, height: u32 },
    #[error("image is {image:?} but mask is {mask:?}")]
    DimensionMismatch { image: (u32, u32), mask: (u32, u32) },
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("class {0:?} is not in the label map")]
    UnknownClass(String),
    #[error("label map has several classes and none is core_column; set target_class")]
    AmbiguousClass,
}

pub type Result<T, E = ExtractionError> = std::result::Result<T, E>;

/// Which box extent the median-band filter inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDimension {
    #[default]
    Width,
    Height,
    Both,
}

impl FilterDimension {
    fn axes(self) -> &'static [Axis] {
        match self {
            FilterDimension::Width => &[Axis::Width],
            FilterDimension::Height => &[Axis::Height],
            FilterDimension::Both => &[Axis::Width, Axis::Height],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Width,
    Height,
}

impl Axis {
    fn of(self, b: &BoundingBox) -> f64 {
        match self {
            Axis::Width => b.w as f64,
            Axis::Height => b.h as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Median-band coefficient: boxes must lie in [median/n, median·n]. Typical 1.2–1.5.
    pub n: f64,
    /// Global width coefficient: boxes narrower than image_width/m are dropped. Typical 50–200.
    pub m: f64,
    /// Boxes whose top edge is at or below `y_max_ratio × height` are dropped; 1.0 disables.
    pub y_max_ratio: f64,
    pub min_count: usize,
    pub max_count: usize,
    pub median_filter: bool,
    pub width_filter: bool,
    pub dimension: FilterDimension,
    /// Class to extract; defaults to `core_column` or the only class.
    pub target_class: Option<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n: 1.2,
            m: 100.0,
            y_max_ratio: 1.0,
            min_count: 1,
            max_count: 6,
            median_filter: true,
            width_filter: true,
            dimension: FilterDimension::Width,
            target_class: None,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExtractionError::InvalidConfig(msg));
        if !(self.n > 1.0) {
            return bad(format!("n must exceed 1, got {}", self.n));
        }
        if !(self.m >= 1.0) || !self.m.is_finite() {
            return bad(format!("m must be at least 1, got {}", self.m));
        }
        if !(self.y_max_ratio > 0.0 && self.y_max_ratio <= 1.0) {
            return bad(format!("y_max_ratio must lie in (0, 1], got {}", self.y_max_ratio));
        }
        if self.min_count > self.max_count {
            return bad(format!("min_count {} exceeds max_count {}", self.min_count, self.max_count));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExtractionError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn class_value(&self, labels: &LabelMap) -> Result<u8> {
        match &self.target_class {
            Some(name) => labels.get(name).ok_or_else(|| ExtractionError::UnknownClass(name.clone())),
            None => labels.primary_class().map(|(_, v)| v).ok_or(ExtractionError::AmbiguousClass),
        }
    }
}

/// Median-derived acceptance band on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianBand {
    pub axis: Axis,
    pub median: f64,
    /// median / n
    pub lower: f64,
    /// median · n
    pub upper: f64,
}

impl MedianBand {
    fn admits(&self, b: &BoundingBox) -> bool {
        let v = self.axis.of(b);
        v >= self.lower && v <= self.upper
    }
}

/// Why a box was removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "filter", rename_all = "snake_case")]
pub enum DropReason {
    Position { y: u32, limit: f64 },
    MedianBand { axis: Axis, value: f64, lower: f64, upper: f64 },
    GlobalWidth { width: u32, gt: f64 },
}

impl DropReason {
    pub fn filter_name(&self) -> &'static str {
        match self {
            DropReason::Position { .. } => "position",
            DropReason::MedianBand { .. } => "median_band",
            DropReason::GlobalWidth { .. } => "global_width",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedBox {
    pub bbox: BoundingBox,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianFilterOutcome {
    pub kept: Vec<BoundingBox>,
    pub dropped: Vec<DroppedBox>,
    pub bands: Vec<MedianBand>,
}

impl MedianFilterOutcome {
    /// (xt_bot, xt_up) of the first filtered axis.
    pub fn thresholds(&self) -> (f64, f64) {
        (self.bands[0].lower, self.bands[0].upper)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn median_band(boxes: &[BoundingBox], n: f64, axis: Axis) -> Result<MedianBand> {
    if boxes.is_empty() {
        return Err(ExtractionError::EmptyInput);
    }
    let mut vals: Vec<f64> = boxes.iter().map(|b| axis.of(b)).collect();
    let mu = median(&mut vals);
    Ok(MedianBand { axis, median: mu, lower: mu / n, upper: mu * n })
}

/// Keeps boxes whose extent on each filtered axis lies in the inclusive
/// band [median/n, median·n].
pub fn median_size_filter(boxes: &[BoundingBox], n: f64, dimension: FilterDimension) -> Result<MedianFilterOutcome> {
    if !(n > 1.0) {
        return Err(ExtractionError::InvalidConfig(format!("n must exceed 1, got {n}")));
    }
    let bands = dimension
        .axes()
        .iter()
        .map(|&axis| median_band(boxes, n, axis))
        .collect::<Result<Vec<_>>>()?;
    let mut out = MedianFilterOutcome { kept: Vec::new(), dropped: Vec::new(), bands };
    for b in boxes {
        match out.bands.iter().find(|band| !band.admits(b)) {
            None => out.kept.push(*b),
            Some(band) => out.dropped.push(DroppedBox {
                bbox: *b,
                reason: DropReason::MedianBand {
                    axis: band.axis,
                    value: band.axis.of(b),
                    lower: band.lower,
                    upper: band.upper,
                },
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthFilterOutcome {
    pub kept: Vec<BoundingBox>,
    pub dropped: Vec<DroppedBox>,
    pub gt: f64,
}

/// Minimum admissible width `gt = image_width / m`; boxes with `w >= gt` are kept.
pub fn global_width_filter(boxes: &[BoundingBox], image_width: u32, m: f64) -> Result<WidthFilterOutcome> {
    if !(m >= 1.0) {
        return Err(ExtractionError::InvalidConfig(format!("m must be at least 1, got {m}")));
    }
    let gt = image_width as f64 / m;
    let (kept, dropped): (Vec<_>, Vec<_>) = boxes.iter().partition(|b| b.w as f64 >= gt);
    Ok(WidthFilterOutcome {
        kept,
        dropped: dropped
            .into_iter()
            .map(|b| DroppedBox { bbox: b, reason: DropReason::GlobalWidth { width: b.w, gt } })
            .collect(),
        gt,
    })
}

/// Keeps boxes whose top edge lies above `y_max_ratio × image_height`.
pub fn position_filter(
    boxes: &[BoundingBox],
    image_height: u32,
    y_max_ratio: f64,
) -> Result<(Vec<BoundingBox>, Vec<DroppedBox>)> {
    if !(y_max_ratio > 0.0 && y_max_ratio <= 1.0) {
        return Err(ExtractionError::InvalidConfig(format!("y_max_ratio must lie in (0, 1], got {y_max_ratio}")));
    }
    let limit = y_max_ratio * image_height as f64;
    let (kept, dropped): (Vec<_>, Vec<_>) = boxes.iter().partition(|b| (b.y as f64) < limit);
    Ok((
        kept,
        dropped
            .into_iter()
            .map(|b| DroppedBox { bbox: b, reason: DropReason::Position { y: b.y, limit } })
            .collect(),
    ))
}

/// Plausibility checks on the final box set, phrased for the person reviewing the image.
pub fn count_check(boxes: &[BoundingBox], config: &FilterConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    if boxes.is_empty() {
        warnings.push("no core detected: the mask produced no usable core columns".to_string());
        return warnings;
    }
    let count = boxes.len();
    if count < config.min_count || count > config.max_count {
        warnings.push(format!(
            "found {count} core columns, expected between {} and {}; check the mask",
            config.min_count, config.max_count
        ));
    }
    if config.n > 1.0 {
        for &axis in config.dimension.axes() {
            let band = median_band(boxes, config.n, axis).expect("non-empty");
            for (i, b) in boxes.iter().enumerate() {
                if !band.admits(b) {
                    let what = match axis {
                        Axis::Width => "width",
                        Axis::Height => "height",
                    };
                    let size = if axis.of(b) > band.upper { "larger" } else { "smaller" };
                    warnings.push(format!(
                        "column {i} ({b}) is {size} than the median {what} {:.1} beyond factor {}; check this column",
                        band.median, config.n
                    ));
                }
            }
        }
    }
    warnings
}

#[derive(Debug, Clone)]
pub struct ColumnCrop {
    pub index: usize,
    pub bbox: BoundingBox,
    pub image: RasterImage,
}

pub fn extract_columns(image: &RasterImage, kept: &[BoundingBox]) -> Result<Vec<ColumnCrop>> {
    kept.iter()
        .enumerate()
        .map(|(index, b)| {
            if !b.fits_within(image.width(), image.height()) {
                return Err(ExtractionError::BoxOutOfBounds { bbox: *b, width: image.width(), height: image.height() });
            }
            Ok(ColumnCrop { index, bbox: *b, image: image.crop(b.x, b.y, b.w, b.h) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub image_width: u32,
    pub image_height: u32,
    pub class_value: u8,
    pub config: FilterConfig,
    pub detected: Vec<BoundingBox>,
    pub kept: Vec<BoundingBox>,
    pub dropped: Vec<DroppedBox>,
    pub medians: Vec<MedianBand>,
    pub gt: Option<f64>,
    pub position_limit: Option<f64>,
    pub warnings: Vec<String>,
}

/// Runs detection and filtering without cropping.
pub fn filter_mask(mask: &GrayMask, labels: &LabelMap, config: &FilterConfig) -> Result<ExtractionReport> {
    config.validate()?;
    let class_value = config.class_value(labels)?;
    let (width, height) = mask.dimensions();
    let detected = labeling::boxes_from_mask(mask, class_value);
    let mut dropped = Vec::new();

    let position_limit = (config.y_max_ratio < 1.0).then(|| config.y_max_ratio * height as f64);
    let mut boxes = if position_limit.is_some() {
        let (kept, d) = position_filter(&detected, height, config.y_max_ratio)?;
        dropped.extend(d);
        kept
    } else {
        detected.clone()
    };

    let mut medians = Vec::new();
    if config.median_filter && !boxes.is_empty() {
        let outcome = median_size_filter(&boxes, config.n, config.dimension)?;
        dropped.extend(outcome.dropped);
        medians = outcome.bands;
        boxes = outcome.kept;
    }

    let mut gt = None;
    if config.width_filter {
        let outcome = global_width_filter(&boxes, width, config.m)?;
        dropped.extend(outcome.dropped);
        gt = Some(outcome.gt);
        boxes = outcome.kept;
    }

    let warnings = count_check(&boxes, config);
    Ok(ExtractionReport {
        image_width: width,
        image_height: height,
        class_value,
        config: config.clone(),
        detected,
        kept: boxes,
        dropped,
        medians,
        gt,
        position_limit,
        warnings,
    })
}

/// Detect → position filter → median filter → global width filter → count
/// check → crops.
pub fn run_pipeline(
    image: &RasterImage,
    mask: &GrayMask,
    labels: &LabelMap,
    config: &FilterConfig,
) -> Result<(ExtractionReport, Vec<ColumnCrop>)> {
    if image.dimensions() != mask.dimensions() {
        return Err(ExtractionError::DimensionMismatch { image: image.dimensions(), mask: mask.dimensions() });
    }
    let report = filter_mask(mask, labels, config)?;
    let crops = extract_columns(image, &report.kept)?;
    Ok((report, crops))
}
