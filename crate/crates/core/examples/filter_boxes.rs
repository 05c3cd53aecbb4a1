//! Applies the median-band and global-width filters to a list of widths.

use corebox::extraction::{global_width_filter, median_size_filter, FilterDimension};
use corebox::BoundingBox;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let widths = [120, 300, 360, 400, 420, 440, 500, 516, 700, 2000];
    let boxes: Vec<BoundingBox> = widths.iter().enumerate().map(|(i, &w)| BoundingBox::new(0, i as u32 * 40, w, 30)).collect();

    let band = median_size_filter(&boxes, 1.2, FilterDimension::Width)?;
    let (lo, hi) = band.thresholds();
    println!("median band [{lo:.2}, {hi:.2}] keeps {} of {}", band.kept.len(), boxes.len());

    let width = global_width_filter(&boxes, 4000, 100.0)?;
    println!("global width threshold {} keeps {} of {}", width.gt, width.kept.len(), boxes.len());
    Ok(())
}
