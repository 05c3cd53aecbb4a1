//! Augments one synthetic pair with every transform enabled and prints the
//! transform log. Writes `tla_image.png` and `tla_mask.png` to the given
//! directory (default: a temp dir).

use std::collections::BTreeMap;

use corebox::imagery::{save_image, save_mask};
use corebox::synth::{core_box, ground_texture, rock_texture, SceneSpec};
use corebox::tla::{augment, AugmentationConfig, AugmentedPair, ClassicSettings, Sample, SamplePool};
use corebox::LabelMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(std::env::temp_dir);
    let (image, mask) = core_box(&SceneSpec::new(480, 320, 4, 3));
    let pool = SamplePool {
        foregrounds: BTreeMap::from([(
            "core_column".to_string(),
            (0..3).map(|i| Sample { id: format!("rock_{i}"), image: rock_texture(300, 50, i) }).collect(),
        )]),
        backgrounds: vec![Sample { id: "ground".into(), image: ground_texture(640, 480, 9) }],
        warnings: Vec::new(),
    };
    let config = AugmentationConfig {
        foreground: BTreeMap::from([("core_column".to_string(), 0.7)]),
        background_top: 1.0,
        background_bottom: 0.5,
        cutout: 0.2,
        mixup: 1.0,
        classic: ClassicSettings { hflip_p: 0.5, noise_p: 0.5, noise_sigma: 3.0, ..Default::default() },
        seed: 42,
    };
    let labels = LabelMap::core_column();
    let result = augment(AugmentedPair::new(image, mask)?, &pool, &config, &labels)?;
    for t in &result.transforms {
        println!("{}", serde_json::to_string(t)?);
    }
    save_image(&result.image, out.join("tla_image.png"))?;
    save_mask(&result.mask, out.join("tla_mask.png"))?;
    println!("{}x{} pair written to {}", result.image.width(), result.image.height(), out.display());
    Ok(())
}
