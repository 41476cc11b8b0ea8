//! Multi-radius morphological vein extraction; writes each plane as a PNG.
//!
//! cargo run --release --example vein_extraction -- [image.png] [kernel]

use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::{load_image, save_gray_png, to_grayscale, Plane};
use leafkit::vein::{extract_vein, VeinConfig};

fn stretched(p: &Plane) -> leafkit::raster::GrayImage {
    let peak = p.as_raw().iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let mut q = p.clone();
    q.as_raw_mut().iter_mut().for_each(|v| *v *= scale);
    q.to_gray()
}

fn main() -> leafkit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let img = match args.first() {
        Some(p) => load_image(p)?,
        None => synth_leaf(1, 3)?.image,
    };
    let cfg = VeinConfig {
        kernel: args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5),
        ..VeinConfig::default()
    };
    let (working, mask) = preprocess(&img, 256)?;
    let stack = extract_vein(&to_grayscale(&working), &mask, &cfg)?;
    let dir = std::env::temp_dir();
    for (r, plane) in stack.radii.iter().zip(&stack.planes) {
        let mean = plane.as_raw().iter().sum::<f64>() / mask.count() as f64;
        println!("radius {r}: mean response {mean:.3}");
        save_gray_png(&stretched(plane), dir.join(format!("leafkit-vein-r{r}.png")))?;
    }
    save_gray_png(&stretched(&stack.fused), dir.join("leafkit-vein-fused.png"))?;
    println!("planes saved as leafkit-vein-*.png in {}", dir.display());
    Ok(())
}
