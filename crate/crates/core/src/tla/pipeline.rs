use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classic::{classic_augment, ClassicSettings};
use super::ops::{apply_background_bottom, apply_background_top, cutout_segment, mixup_segments, swap_foreground};
use super::pool::{Sample, SamplePool};
use super::{check_probability, rng_from_seed, AugmentedPair, Result, TlaError, TlaRng, Transform};
use crate::imagery::{self, DatasetEntry, LabelMap};
use crate::labeling::{connected_components, Segment};

/// Recorded in manifests so outputs can be regenerated.
pub const GENERATOR: &str = "rand_chacha::ChaCha8Rng seeded with seed_from_u64; output i uses seed + i";

/// Every probability defaults to 0 and the seed to 0, so an empty JSON object
/// is the identity configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    /// Per-class probability that each segment of the class gets a new texture.
    pub foreground: BTreeMap<String, f64>,
    pub background_top: f64,
    pub background_bottom: f64,
    /// Per-segment probability of removal.
    pub cutout: f64,
    /// Per-image probability of exchanging two same-class segments.
    pub mixup: f64,
    pub classic: ClassicSettings,
    pub seed: u64,
}

impl AugmentationConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| TlaError::InvalidConfig(e.to_string()))?;
        cfg.validate_probabilities()?;
        Ok(cfg)
    }

    fn validate_probabilities(&self) -> Result<()> {
        for (class, &p) in &self.foreground {
            check_probability(&format!("foreground[{class}]"), p)?;
        }
        check_probability("background_top", self.background_top)?;
        check_probability("background_bottom", self.background_bottom)?;
        check_probability("cutout", self.cutout)?;
        check_probability("mixup", self.mixup)?;
        self.classic.validate()
    }

    /// Checks probabilities, class names, and that the pool can serve every
    /// transform with a non-zero probability.
    pub fn validate(&self, pool: &SamplePool, labels: &LabelMap) -> Result<()> {
        self.validate_probabilities()?;
        for (class, &p) in &self.foreground {
            if labels.get(class).is_none() {
                return Err(TlaError::UnknownClass(class.clone()));
            }
            if p > 0.0 && pool.foreground(class).is_empty() {
                return Err(TlaError::MissingSamples(format!("foreground/{class}")));
            }
        }
        if (self.background_top > 0.0 || self.background_bottom > 0.0 || self.cutout > 0.0) && pool.backgrounds.is_empty() {
            return Err(TlaError::MissingSamples("background".into()));
        }
        Ok(())
    }
}

fn pick<'a>(samples: &'a [Sample], rng: &mut TlaRng) -> &'a Sample {
    &samples[rng.random_range(0..samples.len())]
}

/// One augmented pair.
///
/// Steps, in fixed order: segments per class (label-name order) → per-segment
/// foreground swap → per-segment cut-out → mix-up → background on top →
/// background underneath → classic augmentations. The output is a pure
/// function of the inputs and `config.seed`.
pub fn augment(pair: AugmentedPair, pool: &SamplePool, config: &AugmentationConfig, labels: &LabelMap) -> Result<AugmentedPair> {
    config.validate(pool, labels)?;
    let mut rng = rng_from_seed(config.seed);
    let mut pair = pair;

    let mut segments: Vec<(String, Segment)> = Vec::new();
    for (name, value) in labels.iter() {
        segments.extend(connected_components(&pair.mask, value).into_iter().map(|s| (name.to_string(), s)));
    }

    for (index, (class, segment)) in segments.iter().enumerate() {
        let p = config.foreground.get(class).copied().unwrap_or(0.0);
        if p > 0.0 && rng.random_bool(p) {
            let sample = pick(pool.foreground(class), &mut rng);
            let seed = rng.next_u64();
            pair.image = swap_foreground(&pair.image, &pair.mask, segment, &sample.image, &mut rng_from_seed(seed))?;
            pair.transforms.push(Transform::ForegroundSwap {
                class: class.clone(),
                segment: index,
                bbox: segment.bbox,
                sample: sample.id.clone(),
                seed,
            });
        }
    }

    let mut removed = vec![false; segments.len()];
    if config.cutout > 0.0 {
        for (index, (class, segment)) in segments.iter().enumerate() {
            if rng.random_bool(config.cutout) {
                let sample = pick(&pool.backgrounds, &mut rng);
                let cut = cutout_segment(&pair.image, &pair.mask, segment, &sample.image)?;
                pair.image = cut.image;
                pair.mask = cut.mask;
                removed[index] = true;
                pair.transforms.push(Transform::Cutout {
                    class: class.clone(),
                    segment: index,
                    bbox: segment.bbox,
                    sample: sample.id.clone(),
                });
            }
        }
    }

    if config.mixup > 0.0 && rng.random_bool(config.mixup) {
        let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, (class, _)) in segments.iter().enumerate() {
            if !removed[i] {
                by_class.entry(class.as_str()).or_default().push(i);
            }
        }
        let candidates: Vec<(&str, Vec<usize>)> = by_class.into_iter().filter(|(_, v)| v.len() >= 2).collect();
        if !candidates.is_empty() {
            let (class, members) = &candidates[rng.random_range(0..candidates.len())];
            let a = rng.random_range(0..members.len());
            let mut b = rng.random_range(0..members.len() - 1);
            if b >= a {
                b += 1;
            }
            let (ia, ib) = (members[a], members[b]);
            let seed = rng.next_u64();
            pair.image =
                mixup_segments(&pair.image, &pair.mask, &segments[ia].1, &segments[ib].1, &mut rng_from_seed(seed))?;
            pair.transforms.push(Transform::Mixup { class: class.to_string(), segments: [ia, ib], seed });
        }
    }

    if config.background_top > 0.0 && rng.random_bool(config.background_top) {
        let sample = pick(&pool.backgrounds, &mut rng);
        let seed = rng.next_u64();
        pair.image = apply_background_top(&pair.image, &pair.mask, &sample.image, &mut rng_from_seed(seed))?;
        pair.transforms.push(Transform::BackgroundTop { sample: sample.id.clone(), seed });
    }

    if config.background_bottom > 0.0 && rng.random_bool(config.background_bottom) {
        let sample = pick(&pool.backgrounds, &mut rng);
        let seed = rng.next_u64();
        let (placed, placement) = apply_background_bottom(&pair.image, &pair.mask, &sample.image, &mut rng_from_seed(seed))?;
        pair.image = placed.image;
        pair.mask = placed.mask;
        pair.transforms.push(Transform::BackgroundBottom {
            sample: sample.id.clone(),
            seed,
            scale: placement.scale,
            offset: [placement.offset.0, placement.offset.1],
            canvas: [placement.canvas.0, placement.canvas.1],
        });
    }

    let seed = rng.next_u64();
    classic_augment(pair, &config.classic, &mut rng_from_seed(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub index: usize,
    pub source: String,
    pub source_image: String,
    pub source_mask: String,
    pub seed: u64,
    /// Paths relative to the output directory.
    pub image: String,
    pub mask: String,
    pub transforms: Vec<Transform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub base_seed: u64,
    pub count: usize,
    pub labels: LabelMap,
    pub records: Vec<ManifestRecord>,
}

/// Writes `count` augmented pairs to `<out>/images` and `<out>/masks` plus
/// `<out>/manifest.json`. Output `i` augments entry `i % entries.len()` with
/// seed `config.seed + i`, so results do not depend on thread count.
pub fn augment_dataset(
    entries: &[DatasetEntry],
    pool: &SamplePool,
    config: &AugmentationConfig,
    labels: &LabelMap,
    count: usize,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest> {
    if count == 0 {
        return Err(TlaError::InvalidConfig("count must be at least 1".into()));
    }
    if entries.is_empty() {
        return Err(TlaError::InvalidConfig("no dataset entries".into()));
    }
    config.validate(pool, labels)?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir.join("images"))?;
    fs::create_dir_all(out_dir.join("masks"))?;

    let records = (0..count)
        .into_par_iter()
        .map(|i| -> Result<ManifestRecord> {
            let entry = &entries[i % entries.len()];
            let seed = config.seed.wrapping_add(i as u64);
            let image = imagery::load_image(&entry.image)?;
            let mask = imagery::load_mask(&entry.mask, labels)?;
            let cfg = AugmentationConfig { seed, ..config.clone() };
            let out = augment(AugmentedPair::new(image, mask)?, pool, &cfg, labels)?;
            let name = format!("{i:05}_{}.png", entry.key);
            imagery::save_image(&out.image, out_dir.join("images").join(&name))?;
            imagery::save_mask(&out.mask, out_dir.join("masks").join(&name))?;
            Ok(ManifestRecord {
                index: i,
                source: entry.key.clone(),
                source_image: entry.image.display().to_string(),
                source_mask: entry.mask.display().to_string(),
                seed,
                image: format!("images/{name}"),
                mask: format!("masks/{name}"),
                transforms: out.transforms,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        generator: GENERATOR.to_string(),
        base_seed: config.seed,
        count,
        labels: labels.clone(),
        records,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
