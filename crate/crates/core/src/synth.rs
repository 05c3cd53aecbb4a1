//! Synthetic core box scenes for demos, tests and benchmarks.
//!
//! A scene is a wooden tray with horizontal core columns laid in rows; the
//! mask marks column pixels with the class value. Everything is derived from
//! a seed.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::geometry::BoundingBox;
use crate::imagery::{self, GrayMask, ImageryError, LabelMap, RasterImage};
use crate::tla::{rng_from_seed, TlaRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub columns: u32,
    /// Fraction of each row slot occupied by core, in (0, 1].
    pub fill: f64,
    pub class_value: u8,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(width: u32, height: u32, columns: u32, seed: u64) -> Self {
        Self { width, height, columns, fill: 0.6, class_value: 255, seed }
    }
}

fn clamp8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Wood-grain like tray texture.
pub fn tray_texture(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng_from_seed(seed ^ 0x7a11);
    let phase: f64 = rng.random_range(0.0..6.28);
    let base = [rng.random_range(120.0..170.0), rng.random_range(80.0..110.0), rng.random_range(40.0..70.0)];
    RasterImage::from_fn(width, height, |x, y| {
        let grain = ((y as f64 * 0.35 + (x as f64 * 0.02).sin() * 4.0 + phase).sin() * 14.0) + ((x * 31 + y * 17) % 7) as f64;
        [clamp8(base[0] + grain), clamp8(base[1] + grain * 0.8), clamp8(base[2] + grain * 0.5)]
    })
}

/// Speckled grey-brown rock texture.
pub fn rock_texture(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let tone: f64 = rng.random_range(60.0..190.0);
    let tint = [rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0)];
    let band: f64 = rng.random_range(0.02..0.2);
    let mut noise = rng_from_seed(seed);
    RasterImage::from_fn(width, height, |x, _| {
        let layer = (x as f64 * band).sin() * 18.0;
        let n: f64 = noise.random_range(-12.0..12.0);
        [clamp8(tone + tint[0] + layer + n), clamp8(tone + tint[1] + layer + n), clamp8(tone + tint[2] + layer + n)]
    })
}

/// Ground-photo like background (grass/soil blotches).
pub fn ground_texture(width: u32, height: u32, seed: u64) -> RasterImage {
    let mut rng = rng_from_seed(seed ^ 0x9703);
    let green: f64 = rng.random_range(0.0..1.0);
    let mut noise = rng_from_seed(seed.wrapping_add(1));
    RasterImage::from_fn(width, height, |x, y| {
        let blotch = ((x as f64 * 0.07).sin() + (y as f64 * 0.05).cos()) * 20.0;
        let n: f64 = noise.random_range(-10.0..10.0);
        [clamp8(90.0 - 30.0 * green + blotch + n), clamp8(80.0 + 50.0 * green + blotch + n), clamp8(50.0 + blotch + n)]
    })
}

/// Column boxes of a scene, top to bottom.
pub fn column_boxes(spec: &SceneSpec) -> Vec<BoundingBox> {
    let mut rng = rng_from_seed(spec.seed ^ 0xb0c5);
    let margin_x = (spec.width / 20).max(1);
    let margin_y = (spec.height / 20).max(1);
    let usable_h = spec.height - 2 * margin_y;
    let slot = usable_h / spec.columns.max(1);
    let core_h = ((slot as f64 * spec.fill).round() as u32).clamp(1, slot.max(1));
    (0..spec.columns)
        .map(|i| {
            let jitter_x = rng.random_range(0..=margin_x / 2);
            let shorten = rng.random_range(0..=(spec.width - 2 * margin_x) / 20);
            let x = margin_x + jitter_x;
            let w = (spec.width - 2 * margin_x - jitter_x - shorten).max(1);
            let y = margin_y + i * slot + (slot - core_h) / 2;
            BoundingBox::new(x, y, w, core_h)
        })
        .collect()
}

/// Renders the scene image and its mask.
pub fn core_box(spec: &SceneSpec) -> (RasterImage, GrayMask) {
    let boxes = column_boxes(spec);
    let mut image = tray_texture(spec.width, spec.height, spec.seed);
    let mut mask = GrayMask::background(spec.width, spec.height);
    for (i, b) in boxes.iter().enumerate() {
        let rock = rock_texture(b.w, b.h, spec.seed.wrapping_mul(31).wrapping_add(i as u64));
        // Rounded ends like a cylinder seen from above.
        let r = (b.h / 3).min(b.w / 2);
        for y in 0..b.h {
            for x in 0..b.w {
                let dy = (y as f64 + 0.5 - b.h as f64 / 2.0).abs();
                let cut = |d: u32| {
                    let dx = (r - d) as f64;
                    dx * dx + dy.min(b.h as f64 / 2.0 - 1.0).powi(2) * (r as f64 / (b.h as f64 / 2.0)).powi(2) > (r * r) as f64
                };
                if r > 1 && ((x < r && cut(x)) || (b.w - 1 - x < r && cut(b.w - 1 - x))) {
                    continue;
                }
                image.set_pixel(b.x + x, b.y + y, rock.pixel(x, y));
                mask.set(b.x + x, b.y + y, spec.class_value);
            }
        }
    }
    (image, mask)
}

/// Augmentation config shipped with the toy dataset.
pub const TOY_AUGMENT_CONFIG: &str = r#"{
  "foreground": { "core_column": 0.5 },
  "background_top": 0.5,
  "background_bottom": 0.3,
  "cutout": 0.1,
  "mixup": 0.5,
  "classic": { "hflip_p": 0.5, "vflip_p": 0.2, "noise_p": 0.3, "noise_sigma": 4.0 },
  "seed": 7
}
"#;

/// Writes a small self-contained dataset:
///
/// ```text
/// <dir>/labels.json
/// <dir>/images/box_NN_<top>-<bottom>m.png
/// <dir>/masks/box_NN_<top>-<bottom>m.png
/// <dir>/pool/foreground/core_column/rock_NN.png
/// <dir>/pool/background/ground_NN.png
/// <dir>/augment.json
/// ```
pub fn write_toy_dataset(dir: impl AsRef<Path>, count: usize, seed: u64) -> Result<(), ImageryError> {
    let dir = dir.as_ref();
    for sub in ["images", "masks", "pool/foreground/core_column", "pool/background"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let labels = LabelMap::core_column();
    fs::write(dir.join("labels.json"), serde_json::to_string_pretty(&labels).expect("label map serializes"))?;
    let mut rng: TlaRng = rng_from_seed(seed);
    for i in 0..count {
        let columns = rng.random_range(3..=5);
        let spec = SceneSpec::new(360, 240, columns, seed.wrapping_add(i as u64 * 1000));
        let (image, mask) = core_box(&spec);
        let top = 1200.0 + i as f64;
        let name = format!("box_{i:02}_{top:.1}-{:.1}m.png", top + 1.0);
        imagery::save_image(&image, dir.join("images").join(&name))?;
        imagery::save_mask(&mask, dir.join("masks").join(&name))?;
    }
    for i in 0..3 {
        let rock = rock_texture(400, 60, seed.wrapping_add(500 + i));
        imagery::save_image(&rock, dir.join(format!("pool/foreground/core_column/rock_{i:02}.png")))?;
    }
    for i in 0..2 {
        let ground = ground_texture(480, 320, seed.wrapping_add(900 + i));
        imagery::save_image(&ground, dir.join(format!("pool/background/ground_{i:02}.png")))?;
    }
    fs::write(dir.join("augment.json"), TOY_AUGMENT_CONFIG)?;
    Ok(())
}
