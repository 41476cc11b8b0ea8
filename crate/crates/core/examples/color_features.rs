//! Color-space conversion and per-channel moments over the leaf.
//!
//! cargo run --release --example color_features -- [image.png]

use leafkit::color::{color_features, rgb_to_hsl, rgb_to_hsv, ColorSpace};
use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::load_image;

fn main() -> leafkit::Result<()> {
    for rgb in [[255, 0, 0], [0, 0, 255], [128, 128, 128], [60, 140, 50]] {
        println!("{rgb:?} -> HSV {:.3?}  HSL {:.3?}", rgb_to_hsv(rgb), rgb_to_hsl(rgb));
    }
    let img = match std::env::args().nth(1) {
        Some(p) => load_image(p)?,
        None => synth_leaf(6, 4)?.image,
    };
    let (working, mask) = preprocess(&img, 256)?;
    let v = color_features(&working, &mask)?;
    println!("{:>10} {:>10} {:>12} {:>10} {:>10}", "channel", "mean", "variance", "skewness", "kurtosis");
    let spaces = [ColorSpace::Rgb, ColorSpace::Hsv, ColorSpace::Hsl];
    let channels = spaces.iter().flat_map(|s| s.channel_names());
    for (name, stats) in channels.zip(v.as_slice().chunks(4)) {
        println!(
            "{name:>10} {:>10.4} {:>12.4} {:>10.4} {:>10.4}",
            stats[0], stats[1], stats[2], stats[3]
        );
    }
    Ok(())
}
