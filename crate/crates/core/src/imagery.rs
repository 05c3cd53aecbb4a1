//! Raster substrate shared by every other module: RGB photographs, 8-bit
//! label masks, the JSON label map binding class names to grey values, and
//! the loaders / resamplers / normalizer around them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;

/// Grey value reserved for background in every mask.
pub const BACKGROUND: u8 = 0;

#[derive(Debug, Error)]
pub enum ImageryError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot decode {path}: {reason}")]
    Decode { path: String, reason: String },
    #[error("mask contains grey value {0} which is neither background nor a registered class")]
    UnknownLabelValue(u8),
    #[error("label map parse error: {0}")]
    Parse(String),
    #[error("label map assigns grey value {value} to both {first:?} and {second:?}")]
    DuplicateValue { value: i64, first: String, second: String },
    #[error("label {name:?} has grey value {value}; class values must lie in 1..=255")]
    ValueOutOfRange { name: String, value: i64 },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("invalid resize target {width}x{height}")]
    InvalidTarget { width: u32, height: u32 },
    #[error("dataset at {0} produced no usable image/mask pairs")]
    EmptyDataset(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("encode error: {0}")]
    Encode(String),
}

pub type Result<T, E = ImageryError> = std::result::Result<T, E>;

/// Row-major interleaved 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RasterImage({}x{})", self.width, self.height)
    }
}

impl RasterImage {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImageryError::InvalidRaster(format!("empty image {width}x{height}")));
        }
        let expected = width as usize * height as usize * Self::CHANNELS;
        if data.len() != expected {
            return Err(ImageryError::InvalidRaster(format!(
                "expected {expected} samples for {width}x{height} RGB, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Panics on a zero dimension.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "zero-sized image");
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Copies the `w`×`h` window at (`x`, `y`). The window must lie inside the image.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Self {
        assert!(w > 0 && h > 0 && x + w <= self.width && y + h <= self.height);
        let mut data = Vec::with_capacity(w as usize * h as usize * 3);
        for row in y..y + h {
            let start = self.offset(x, row);
            data.extend_from_slice(&self.data[start..start + w as usize * 3]);
        }
        Self { width: w, height: h, data }
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.data.clone()).expect("consistent buffer")
    }

    pub fn from_rgb_image(img: RgbImage) -> Self {
        let (width, height) = img.dimensions();
        Self { width, height, data: img.into_raw() }
    }
}

/// Row-major single-channel 8-bit label raster.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayMask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayMask({}x{})", self.width, self.height)
    }
}

impl GrayMask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImageryError::InvalidRaster(format!("empty mask {width}x{height}")));
        }
        if data.len() != width as usize * height as usize {
            return Err(ImageryError::InvalidRaster(format!(
                "expected {} samples for {width}x{height} mask, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn background(width: u32, height: u32) -> Self {
        Self::filled(width, height, BACKGROUND)
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "zero-sized mask");
        Self { width, height, data: vec![value; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "zero-sized mask");
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    /// Sorted set of grey values present.
    pub fn values(&self) -> BTreeSet<u8> {
        let mut seen = [false; 256];
        for &v in &self.data {
            seen[v as usize] = true;
        }
        (0..=255u8).filter(|&v| seen[v as usize]).collect()
    }

    pub fn count(&self, value: u8) -> usize {
        self.data.iter().filter(|&&v| v == value).count()
    }

    /// Checks every pixel is background or a class of `labels`.
    pub fn validate(&self, labels: &LabelMap) -> Result<()> {
        match self.values().into_iter().find(|&v| v != BACKGROUND && !labels.contains_value(v)) {
            Some(v) => Err(ImageryError::UnknownLabelValue(v)),
            None => Ok(()),
        }
    }

    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Self {
        assert!(w > 0 && h > 0 && x + w <= self.width && y + h <= self.height);
        let mut data = Vec::with_capacity(w as usize * h as usize);
        for row in y..y + h {
            let start = row as usize * self.width as usize + x as usize;
            data.extend_from_slice(&self.data[start..start + w as usize]);
        }
        Self { width: w, height: h, data }
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.data.clone()).expect("consistent buffer")
    }
}

#[derive(Deserialize)]
struct LabelFile {
    labels: BTreeMap<String, serde_json::Value>,
}

/// Class name → grey value binding. Background is always 0 and never a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    entries: BTreeMap<String, u8>,
}

impl LabelMap {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, i64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        let mut by_value: BTreeMap<u8, String> = BTreeMap::new();
        for (name, value) in entries {
            let name = name.into().trim().to_string();
            if name.is_empty() {
                return Err(ImageryError::Parse("empty class name".into()));
            }
            if !(1..=255).contains(&value) {
                return Err(ImageryError::ValueOutOfRange { name, value });
            }
            let v = value as u8;
            if let Some(first) = by_value.get(&v) {
                return Err(ImageryError::DuplicateValue { value, first: first.clone(), second: name });
            }
            if map.insert(name.clone(), v).is_some() {
                return Err(ImageryError::Parse(format!("class {name:?} listed twice")));
            }
            by_value.insert(v, name);
        }
        if map.is_empty() {
            return Err(ImageryError::Parse("label map declares no classes".into()));
        }
        Ok(Self { entries: map })
    }

    /// The conventional binary map `{"core_column": 255}`.
    pub fn core_column() -> Self {
        Self::new([("core_column", 255)]).expect("static map")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: LabelFile =
            serde_json::from_str(text).map_err(|e| ImageryError::Parse(e.to_string()))?;
        let mut pairs = Vec::with_capacity(file.labels.len());
        for (name, value) in file.labels {
            let v = value
                .as_i64()
                .ok_or_else(|| ImageryError::Parse(format!("value of {name:?} is not an integer")))?;
            pairs.push((name, v));
        }
        Self::new(pairs)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::json!({ "labels": self.entries }).to_string()
    }

    pub fn get(&self, name: &str) -> Option<u8> {
        self.entries.get(name.trim()).copied()
    }

    pub fn name_of(&self, value: u8) -> Option<&str> {
        self.entries.iter().find(|(_, &v)| v == value).map(|(k, _)| k.as_str())
    }

    pub fn contains_value(&self, value: u8) -> bool {
        self.entries.values().any(|&v| v == value)
    }

    /// Classes in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The class used for core extraction: `core_column` when registered,
    /// otherwise the only class of a single-class map.
    pub fn primary_class(&self) -> Option<(&str, u8)> {
        if let Some((k, &v)) = self.entries.get_key_value("core_column") {
            return Some((k.as_str(), v));
        }
        if self.entries.len() == 1 {
            return self.iter().next();
        }
        None
    }
}

impl Serialize for LabelMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            labels: &'a BTreeMap<String, u8>,
        }
        Out { labels: &self.entries }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        LabelMap::from_json_str(&value.to_string()).map_err(serde::de::Error::custom)
    }
}

/// Real-valued image with samples in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Per-image min-max normalization over all channels. A constant image maps to zeros.
pub fn min_max_normalize(image: &RasterImage) -> NormalizedImage {
    let (lo, hi) = image
        .data
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let data = if hi == lo {
        vec![0.0; image.data.len()]
    } else {
        let span = (hi - lo) as f32;
        image.data.iter().map(|&v| (v - lo) as f32 / span).collect()
    };
    NormalizedImage { width: image.width, height: image.height, channels: 3, data }
}

/// Resampling with the interpolation appropriate to the raster kind.
pub trait Resample: Sized {
    fn resample(&self, width: u32, height: u32) -> Self;
}

/// Resizes to `width`×`height`: bilinear for images, nearest-neighbour for masks.
pub fn resize<R: Resample>(raster: &R, width: u32, height: u32) -> Result<R> {
    if width == 0 || height == 0 {
        return Err(ImageryError::InvalidTarget { width, height });
    }
    Ok(raster.resample(width, height))
}

/// Source coordinate and blend weight for bilinear sampling along one axis
/// (pixel-centre aligned).
fn linear_taps(src: u32, dst: u32) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (s.floor() as usize).min(src as usize - 1);
            let i1 = (i0 + 1).min(src as usize - 1);
            (i0, i1, (s - i0 as f64) as f32)
        })
        .collect()
}

fn nearest_taps(src: u32, dst: u32) -> Vec<usize> {
    (0..dst)
        .map(|d| {
            let s = ((d as u64 * 2 + 1) * src as u64) / (dst as u64 * 2);
            (s as usize).min(src as usize - 1)
        })
        .collect()
}

impl RasterImage {
    /// The `window` of this image as it would appear after a bilinear resize
    /// to `width`×`height`, without materialising the full resize.
    pub fn resample_window(&self, width: u32, height: u32, window: BoundingBox) -> Self {
        assert!(window.fits_within(width, height), "window outside resized extent");
        // 8-bit fixed-point weights; the result is exact for integer scales
        // and within one grey level of float bilinear otherwise.
        let fixed = |(i0, i1, f): (usize, usize, f32)| (i0, i1, (f * 256.0).round() as u32);
        let xs: Vec<(usize, usize, u32)> = linear_taps(self.width, width)[window.x as usize..window.right() as usize]
            .iter()
            .map(|&t| fixed(t))
            .map(|(a, b, f)| (a * 3, b * 3, f))
            .collect();
        let ys: Vec<(usize, usize, u32)> =
            linear_taps(self.height, height)[window.y as usize..window.bottom() as usize].iter().map(|&t| fixed(t)).collect();
        let stride = self.width as usize * 3;
        let mut data = vec![0u8; window.w as usize * window.h as usize * 3];
        data.par_chunks_exact_mut(window.w as usize * 3).zip(ys).for_each(|(row, (y0, y1, fy))| {
            let r0 = &self.data[y0 * stride..(y0 + 1) * stride];
            let r1 = &self.data[y1 * stride..(y1 + 1) * stride];
            let gy = 256 - fy;
            for (px, &(x0, x1, fx)) in row.chunks_exact_mut(3).zip(&xs) {
                let gx = 256 - fx;
                for c in 0..3 {
                    let top = r0[x0 + c] as u32 * gx + r0[x1 + c] as u32 * fx;
                    let bot = r1[x0 + c] as u32 * gx + r1[x1 + c] as u32 * fx;
                    px[c] = ((top * gy + bot * fy + (1 << 15)) >> 16) as u8;
                }
            }
        });
        Self { width: window.w, height: window.h, data }
    }
}

impl Resample for RasterImage {
    fn resample(&self, width: u32, height: u32) -> Self {
        if (width, height) == self.dimensions() {
            return self.clone();
        }
        self.resample_window(width, height, BoundingBox::new(0, 0, width, height))
    }
}

impl Resample for GrayMask {
    fn resample(&self, width: u32, height: u32) -> Self {
        if (width, height) == self.dimensions() {
            return self.clone();
        }
        let xs = nearest_taps(self.width, width);
        let ys = nearest_taps(self.height, height);
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for &sy in &ys {
            let row = &self.data[sy * self.width as usize..(sy + 1) * self.width as usize];
            data.extend(xs.iter().map(|&sx| row[sx]));
        }
        Self { width, height, data }
    }
}

fn decode_err(path: impl Into<String>, e: impl std::fmt::Display) -> ImageryError {
    ImageryError::Decode { path: path.into(), reason: e.to_string() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ImageryError::FileNotFound(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Decodes PNG/JPEG/TIFF bytes into RGB; grey sources are expanded to three channels.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    decode_image_named(bytes, "<memory>")
}

fn decode_image_named(bytes: &[u8], name: &str) -> Result<RasterImage> {
    let img = image::load_from_memory(bytes).map_err(|e| decode_err(name, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(decode_err(name, "zero-sized raster"));
    }
    Ok(RasterImage::from_rgb_image(img.to_rgb8()))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    decode_image_named(&read_bytes(path)?, &path.display().to_string())
}

/// Decodes a mask: 8-bit grey, grey+alpha, or RGB(A) whose channels agree on every pixel.
pub fn decode_mask(bytes: &[u8], labels: &LabelMap) -> Result<GrayMask> {
    decode_mask_named(bytes, labels, "<memory>")
}

fn decode_mask_named(bytes: &[u8], labels: &LabelMap, name: &str) -> Result<GrayMask> {
    let img = image::load_from_memory(bytes).map_err(|e| decode_err(name, e))?;
    let (w, h) = (img.width(), img.height());
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageLumaA8(g) => g.into_raw().chunks_exact(2).map(|p| p[0]).collect(),
        DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => {
            let rgb = img.to_rgb8();
            let mut out = Vec::with_capacity(w as usize * h as usize);
            for p in rgb.pixels() {
                if p[0] != p[1] || p[1] != p[2] {
                    return Err(decode_err(name, "mask has distinct colour channels"));
                }
                out.push(p[0]);
            }
            out
        }
        other => {
            return Err(decode_err(name, format!("unsupported mask pixel type {:?}", other.color())))
        }
    };
    let mask = GrayMask::new(w, h, data).map_err(|e| decode_err(name, e))?;
    mask.validate(labels)?;
    Ok(mask)
}

pub fn load_mask(path: impl AsRef<Path>, labels: &LabelMap) -> Result<GrayMask> {
    let path = path.as_ref();
    decode_mask_named(&read_bytes(path)?, labels, &path.display().to_string())
}

pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ImageryError::Parse(e.to_string()))?;
    LabelMap::from_json_str(text)
}

/// 8-bit greyscale PNG bytes.
pub fn encode_mask_png(mask: &GrayMask) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    mask.to_gray_image()
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| ImageryError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn encode_image_png(image: &RasterImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    image
        .to_rgb_image()
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| ImageryError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn save_mask(mask: &GrayMask, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_mask_png(mask)?)?;
    Ok(())
}

/// Saves in the format implied by the extension (PNG when there is none).
pub fn save_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Png);
    image
        .to_rgb_image()
        .save_with_format(path, format)
        .map_err(|e| ImageryError::Encode(format!("{}: {e}", path.display())))
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "tif", "tiff"];

pub(crate) fn is_image_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files of a directory keyed by stem, in stem order.
pub fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(ImageryError::FileNotFound(dir.to_path_buf()));
    }
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if !is_image_file(&path) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            // First by name wins when two extensions share a stem.
            out.entry(stem.to_string())
                .and_modify(|p: &mut PathBuf| {
                    if path < *p {
                        *p = path.clone();
                    }
                })
                .or_insert(path);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub key: String,
    pub image: PathBuf,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    pub warnings: Vec<String>,
}

/// Pairs images with masks by filename stem. Unmatched files, unreadable
/// files, size mismatches, and masks with unknown grey values are excluded
/// and reported as warnings.
pub fn validate_dataset(
    image_dir: impl AsRef<Path>,
    mask_dir: impl AsRef<Path>,
    labels: &LabelMap,
) -> Result<Dataset> {
    let image_dir = image_dir.as_ref();
    let images = files_by_stem(image_dir)?;
    let masks = files_by_stem(mask_dir.as_ref())?;
    let mut out = Dataset::default();
    for (stem, image) in &images {
        let Some(mask) = masks.get(stem) else {
            out.warnings.push(format!("{}: no mask with stem {stem:?}", image.display()));
            continue;
        };
        let dims = match image::image_dimensions(image) {
            Ok(d) => d,
            Err(e) => {
                out.warnings.push(format!("{}: {e}", image.display()));
                continue;
            }
        };
        match load_mask(mask, labels) {
            Ok(m) if m.dimensions() != dims => out.warnings.push(format!(
                "{stem}: image is {}x{} but mask is {}x{}",
                dims.0,
                dims.1,
                m.width(),
                m.height()
            )),
            Ok(_) => out.entries.push(DatasetEntry {
                key: stem.clone(),
                image: image.clone(),
                mask: mask.clone(),
            }),
            Err(e) => out.warnings.push(format!("{}: {e}", mask.display())),
        }
    }
    for (stem, mask) in &masks {
        if !images.contains_key(stem) {
            out.warnings.push(format!("{}: no image with stem {stem:?}", mask.display()));
        }
    }
    if out.entries.is_empty() {
        return Err(ImageryError::EmptyDataset(image_dir.to_path_buf()));
    }
    Ok(out)
}
