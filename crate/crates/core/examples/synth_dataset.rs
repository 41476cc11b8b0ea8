//! Render the seeded synthetic dataset and report how well each leaf's
//! segmented area matches its analytic area.
//!
//! cargo run --release --example synth_dataset -- [out_dir] [per_class] [seed]

use std::path::PathBuf;

use leafkit::pipeline::synth::{synth_leaf, write_dataset, PROFILES, SYNTH_CLASSES};
use leafkit::raster::{binarize, to_grayscale};

fn main() -> leafkit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("leafkit-synth"));
    let per_class = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);

    println!("class  aspect  serration  hue    area(px)  analytic  err%");
    for class in 0..SYNTH_CLASSES {
        let leaf = synth_leaf(class, seed)?;
        let area = binarize(&to_grayscale(&leaf.image))?.count() as f64;
        let want = leaf.params.analytic_area();
        println!(
            "{class:>5}  {:>6.2}  {:>9.3}  {:>5.1}  {area:>8.0}  {want:>8.0}  {:>4.1}",
            PROFILES[class].aspect,
            PROFILES[class].serration,
            leaf.params.hue,
            100.0 * (area - want).abs() / want
        );
    }
    let n = write_dataset(&out, per_class, seed)?;
    println!("wrote {n} PNGs under {}", out.display());
    Ok(())
}
