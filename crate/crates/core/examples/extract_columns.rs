//! Detects and filters core columns in a synthetic box with two spurious
//! blobs, then prints kept and dropped boxes.

use corebox::extraction::{run_pipeline, FilterConfig};
use corebox::synth::{core_box, SceneSpec};
use corebox::LabelMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (image, mut mask) = core_box(&SceneSpec::new(1200, 800, 5, 17));
    // A label sticker and a stray fragment the filters should reject.
    for y in 5..25 {
        for x in 10..40 {
            mask.set(x, y, 255);
        }
    }
    for y in 780..790 {
        for x in 600..1150 {
            mask.set(x, y, 255);
        }
    }
    let (report, crops) = run_pipeline(&image, &mask, &LabelMap::core_column(), &FilterConfig::default())?;
    for c in &crops {
        println!("kept    #{} {}", c.index, c.bbox);
    }
    for d in &report.dropped {
        println!("dropped {} by {}", d.bbox, d.reason.filter_name());
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
