//! Flip / rotate / noise / colour jitter / resize. Geometric transforms apply
//! to image and mask alike; photometric ones touch the image only.

use std::sync::OnceLock;

use rand::Rng;
use rand::RngCore;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use serde::{Deserialize, Serialize};

use super::{check_probability, rng_from_seed, AugmentedPair, Result, TlaError, Transform};
use crate::imagery::{GrayMask, RasterImage, Resample, BACKGROUND};

/// Largest non-right-angle rotation accepted, in degrees.
const MAX_SMALL_ANGLE: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicSettings {
    pub hflip_p: f64,
    pub vflip_p: f64,
    pub rotate_p: f64,
    /// Candidate angles in degrees, clockwise; multiples of 90 or within ±15.
    pub rotations: Vec<f64>,
    pub noise_p: f64,
    /// Gaussian noise standard deviation in grey levels.
    pub noise_sigma: f64,
    pub jitter_p: f64,
    /// Per-channel gain is drawn from [1 - jitter, 1 + jitter].
    pub jitter: f64,
    pub resize: Option<[u32; 2]>,
}

impl Default for ClassicSettings {
    fn default() -> Self {
        Self {
            hflip_p: 0.0,
            vflip_p: 0.0,
            rotate_p: 0.0,
            rotations: vec![90.0, 180.0, 270.0],
            noise_p: 0.0,
            noise_sigma: 0.0,
            jitter_p: 0.0,
            jitter: 0.0,
            resize: None,
        }
    }
}

fn is_right_angle(deg: f64) -> bool {
    deg.rem_euclid(90.0) == 0.0
}

impl ClassicSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("hflip", self.hflip_p),
            ("vflip", self.vflip_p),
            ("rotate", self.rotate_p),
            ("noise", self.noise_p),
            ("jitter", self.jitter_p),
        ] {
            check_probability(name, p)?;
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(TlaError::InvalidConfig(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(TlaError::InvalidConfig(format!("jitter must lie in [0, 1), got {}", self.jitter)));
        }
        if let Some(&bad) =
            self.rotations.iter().find(|&&a| !a.is_finite() || !(is_right_angle(a) || a.abs() <= MAX_SMALL_ANGLE))
        {
            return Err(TlaError::InvalidConfig(format!(
                "rotation {bad} is neither a multiple of 90 nor within ±{MAX_SMALL_ANGLE} degrees"
            )));
        }
        if self.rotate_p > 0.0 && self.rotations.is_empty() {
            return Err(TlaError::InvalidConfig("rotate_p > 0 with no rotation angles".into()));
        }
        if let Some([w, h]) = self.resize {
            if w == 0 || h == 0 {
                return Err(TlaError::InvalidConfig(format!("resize target {w}x{h}")));
            }
        }
        Ok(())
    }
}

fn flip_horizontal(pair: &mut AugmentedPair) {
    let w = pair.image.width() as usize;
    for row in pair.image.data_mut().chunks_exact_mut(w * 3) {
        for x in 0..w / 2 {
            for c in 0..3 {
                row.swap(x * 3 + c, (w - 1 - x) * 3 + c);
            }
        }
    }
    for row in pair.mask.data_mut().chunks_exact_mut(w) {
        row.reverse();
    }
}

fn flip_vertical(pair: &mut AugmentedPair) {
    let (w, h) = (pair.image.width() as usize, pair.image.height() as usize);
    for (stride, data) in [(w * 3, pair.image.data_mut()), (w, pair.mask.data_mut())] {
        for y in 0..h / 2 {
            let (top, bottom) = data.split_at_mut((h - 1 - y) * stride);
            top[y * stride..(y + 1) * stride].swap_with_slice(&mut bottom[..stride]);
        }
    }
}

/// Exact rotation by a multiple of 90° clockwise.
fn rotate_right_angle(pair: &AugmentedPair, quarter_turns: u32) -> AugmentedPair {
    let (w, h) = pair.image.dimensions();
    let turns = quarter_turns % 4;
    if turns == 0 {
        return pair.clone();
    }
    let (nw, nh) = if turns % 2 == 1 { (h, w) } else { (w, h) };
    // Source coordinate for each destination pixel.
    let src = |x: u32, y: u32| -> (u32, u32) {
        match turns {
            1 => (y, h - 1 - x),
            2 => (w - 1 - x, h - 1 - y),
            _ => (w - 1 - y, x),
        }
    };
    let image = RasterImage::from_fn(nw, nh, |x, y| {
        let (sx, sy) = src(x, y);
        pair.image.pixel(sx, sy)
    });
    let mask = GrayMask::from_fn(nw, nh, |x, y| {
        let (sx, sy) = src(x, y);
        pair.mask.get(sx, sy)
    });
    AugmentedPair { image, mask, transforms: pair.transforms.clone() }
}

/// Rotation about the image centre keeping the canvas size: bilinear for the
/// image, nearest for the mask, 0 where the source falls outside.
fn rotate_small(pair: &AugmentedPair, degrees: f64) -> AugmentedPair {
    let (w, h) = pair.image.dimensions();
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut image = RasterImage::filled(w, h, [0, 0, 0]);
    let mut mask = GrayMask::background(w, h);
    let src_img = &pair.image;
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            // Inverse of a clockwise (screen) rotation.
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            let (nx, ny) = (sx.round(), sy.round());
            if nx < 0.0 || ny < 0.0 || nx >= w as f64 || ny >= h as f64 {
                continue;
            }
            mask.set(x, y, pair.mask.get(nx as u32, ny as u32));
            let x0 = sx.floor().clamp(0.0, w as f64 - 1.0);
            let y0 = sy.floor().clamp(0.0, h as f64 - 1.0);
            let x1 = (x0 + 1.0).min(w as f64 - 1.0);
            let y1 = (y0 + 1.0).min(h as f64 - 1.0);
            let fx = (sx - x0).clamp(0.0, 1.0);
            let fy = (sy - y0).clamp(0.0, 1.0);
            let (a, b) = (src_img.pixel(x0 as u32, y0 as u32), src_img.pixel(x1 as u32, y0 as u32));
            let (c, d) = (src_img.pixel(x0 as u32, y1 as u32), src_img.pixel(x1 as u32, y1 as u32));
            let mut px = [0u8; 3];
            for k in 0..3 {
                let top = a[k] as f64 + (b[k] as f64 - a[k] as f64) * fx;
                let bot = c[k] as f64 + (d[k] as f64 - c[k] as f64) * fx;
                px[k] = (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
            image.set_pixel(x, y, px);
        }
    }
    debug_assert!(mask.values().iter().all(|&v| v == BACKGROUND || pair.mask.values().contains(&v)));
    AugmentedPair { image, mask, transforms: pair.transforms.clone() }
}

/// Rotates image and mask clockwise by `degrees` (multiple of 90: exact, with
/// dimensions swapped on odd quarter turns; otherwise about the centre).
pub fn rotate_pair(pair: &AugmentedPair, degrees: f64) -> AugmentedPair {
    if is_right_angle(degrees) {
        rotate_right_angle(pair, (degrees.rem_euclid(360.0) / 90.0) as u32)
    } else {
        rotate_small(pair, degrees)
    }
}

/// Bytes per independently seeded noise block. Fixed, so the result does
/// not depend on the number of threads.
const NOISE_BLOCK: usize = 1 << 16;

/// Standard normal quantiles at the centres of 2^16 equal-probability bins.
/// Drawing a uniform 16-bit index and looking it up samples the normal
/// distribution to within the bin resolution.
fn normal_quantiles() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        (0..1usize << 16).map(|i| n.inverse_cdf((i as f64 + 0.5) / 65536.0)).collect()
    })
}

fn add_noise(image: &mut RasterImage, sigma: f64, seed: u64) {
    // Pixel values are integers, so rounding the offset first is exact.
    let offsets: Vec<i16> = normal_quantiles().iter().map(|q| (q * sigma).round().clamp(-255.0, 255.0) as i16).collect();
    image.data_mut().par_chunks_mut(NOISE_BLOCK).enumerate().for_each(|(i, block)| {
        let mut rng = rng_from_seed(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        for quad in block.chunks_mut(4) {
            let bits = rng.next_u64();
            for (k, v) in quad.iter_mut().enumerate() {
                let idx = (bits >> (16 * k)) as u16 as usize;
                *v = (*v as i16 + offsets[idx]).clamp(0, 255) as u8;
            }
        }
    });
}

fn jitter_colours(image: &mut RasterImage, factors: [f64; 3]) {
    let f = factors.map(|f| f as f32);
    for px in image.data_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = (px[c] as f32 * f[c]).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Applies, in order and each with its own probability: horizontal flip,
/// vertical flip, rotation, Gaussian noise, colour jitter; then the optional
/// resize. Appends a transform record per applied transform.
pub fn classic_augment<R: Rng + ?Sized>(
    pair: AugmentedPair,
    settings: &ClassicSettings,
    rng: &mut R,
) -> Result<AugmentedPair> {
    settings.validate()?;
    let mut pair = pair;
    if settings.hflip_p > 0.0 && rng.random_bool(settings.hflip_p) {
        flip_horizontal(&mut pair);
        pair.transforms.push(Transform::HorizontalFlip);
    }
    if settings.vflip_p > 0.0 && rng.random_bool(settings.vflip_p) {
        flip_vertical(&mut pair);
        pair.transforms.push(Transform::VerticalFlip);
    }
    if settings.rotate_p > 0.0 && rng.random_bool(settings.rotate_p) {
        let degrees = settings.rotations[rng.random_range(0..settings.rotations.len())];
        pair = rotate_pair(&pair, degrees);
        pair.transforms.push(Transform::Rotate { degrees });
    }
    if settings.noise_p > 0.0 && rng.random_bool(settings.noise_p) {
        let seed = rng.next_u64();
        if settings.noise_sigma > 0.0 {
            add_noise(&mut pair.image, settings.noise_sigma, seed);
        }
        pair.transforms.push(Transform::GaussianNoise { sigma: settings.noise_sigma, seed });
    }
    if settings.jitter_p > 0.0 && rng.random_bool(settings.jitter_p) {
        let j = settings.jitter;
        let factors = [0; 3].map(|_| if j > 0.0 { rng.random_range(1.0 - j..=1.0 + j) } else { 1.0 });
        jitter_colours(&mut pair.image, factors);
        pair.transforms.push(Transform::ColorJitter { factors });
    }
    if let Some([w, h]) = settings.resize {
        if (w, h) != pair.image.dimensions() {
            pair.image = pair.image.resample(w, h);
            pair.mask = pair.mask.resample(w, h);
        }
        pair.transforms.push(Transform::Resize { width: w, height: h });
    }
    Ok(pair)
}
