//! Scores predicted masks against ground truth and prints the summary table.
//!
//! Predictions here are the ground truth shifted right by a few pixels, so
//! the scores degrade with the shift.

use corebox::metrics::{evaluate_pair, summarize, summary_table};
use corebox::synth::{core_box, SceneSpec};
use corebox::GrayMask;

fn shifted(mask: &GrayMask, dx: u32) -> GrayMask {
    GrayMask::from_fn(mask.width(), mask.height(), |x, y| if x >= dx { mask.get(x - dx, y) } else { 0 })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut reports = Vec::new();
    for (i, dx) in [0, 2, 5, 10, 20].into_iter().enumerate() {
        let (_, truth) = core_box(&SceneSpec::new(360, 240, 4, i as u64));
        let report = evaluate_pair(&shifted(&truth, dx), &truth, 255)?;
        println!("shift {dx:>2}px  iou {:.3}  f1 {:.3}", report.iou, report.f(1.0).unwrap_or(0.0));
        reports.push(report);
    }
    println!("\n{}", summary_table(&summarize(&reports)?));
    Ok(())
}
