//! Writes the synthetic toy dataset (images, masks, labels, sample pool).
//!
//!     cargo run -p corebox --example toy_dataset -- [out_dir] [count] [seed]

use std::env;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = env::args().skip(1).collect();
    let out = args.first().map(String::as_str).unwrap_or("data/toy");
    let count = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let seed = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    corebox::synth::write_toy_dataset(out, count, seed)?;
    println!("wrote {count} core box images to {out}");
    Ok(())
}
