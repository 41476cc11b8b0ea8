//! Gray-level co-occurrence matrix and the fourteen Haralick features.
//!
//! cargo run --release --example texture_features -- [image.png] [levels]

use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::{load_image, to_grayscale};
use leafkit::texture::{compute_glcm, haralick_features, texture_features, GlcmConfig, FEATURE_NAMES};

fn main() -> leafkit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let img = match args.first() {
        Some(p) => load_image(p)?,
        None => synth_leaf(5, 2)?.image,
    };
    let cfg = GlcmConfig {
        levels: args.get(1).and_then(|s| s.parse().ok()).unwrap_or(32),
        ..GlcmConfig::default()
    };
    let (working, mask) = preprocess(&img, 256)?;
    let gray = to_grayscale(&working);

    let glcm = compute_glcm(&gray, &mask, &cfg)?;
    println!("{} pixel pairs over angles {:?}", glcm.pair_count(), cfg.angles);
    let pooled = haralick_features(&glcm)?;
    let averaged = texture_features(&gray, &mask, &cfg)?;
    println!("{:>34}  {:>12}  {:>12}", "feature", "pooled GLCM", "angle mean");
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        println!("{name:>34}  {:>12.5}  {:>12.5}", pooled.features[k], averaged[k]);
    }
    Ok(())
}
