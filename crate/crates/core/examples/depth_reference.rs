//! Assigns depths to columns proportionally and with a fixed column length,
//! then applies a user edit and shows the resulting gap warning and CSV.

use corebox::depthref::{adjust_depths, depth_csv_string, reference_columns, DepthEdit, DepthMode, DepthSpec};
use corebox::BoundingBox;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kept = [
        BoundingBox::new(40, 20, 900, 80),
        BoundingBox::new(40, 140, 880, 80),
        BoundingBox::new(40, 260, 450, 80),
    ];
    let spec = DepthSpec::new(1200.0, 1202.0);
    let proportional = reference_columns(&kept, &spec)?;
    for iv in &proportional.intervals {
        println!("{iv}");
    }

    let fixed = reference_columns(&kept, &DepthSpec { mode: DepthMode::FixedLength { meters: 0.9 }, ..spec })?;
    for iv in &fixed.intervals {
        println!("fixed {iv}");
    }
    fixed.warnings.iter().for_each(|w| println!("warning: {w}"));

    let edited = adjust_depths(&proportional.intervals, &[DepthEdit { column: 1, from: 1200.85, to: 1201.60 }])?;
    edited.warnings.iter().for_each(|w| println!("warning: {w}"));
    print!("{}", depth_csv_string(&kept, Some(&edited.intervals)));
    Ok(())
}
