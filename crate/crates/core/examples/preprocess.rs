//! Binarize, align upright, crop and resize one leaf; save the working image
//! and mask.
//!
//! cargo run --release --example preprocess -- [image.png] [side]

use leafkit::geometry::principal_axes;
use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::{binarize, load_image, save_gray_png, save_png, to_grayscale};

fn main() -> leafkit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let img = match args.first() {
        Some(p) => load_image(p)?,
        None => synth_leaf(3, 11)?.image,
    };
    let side = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(256);

    let raw = binarize(&to_grayscale(&img))?;
    let axes = principal_axes(&raw)?;
    println!(
        "input {}x{}, leaf pixels {}, major axis at {:.1} deg (eigen ratio {:.2})",
        img.width(),
        img.height(),
        raw.count(),
        axes.angle.to_degrees(),
        axes.major / axes.minor.max(f64::MIN_POSITIVE)
    );

    let (working, mask) = preprocess(&img, side)?;
    let upright = principal_axes(&mask)?;
    println!(
        "working {}x{}, leaf pixels {}, major axis now at {:.1} deg",
        working.width(),
        working.height(),
        mask.count(),
        upright.angle.to_degrees()
    );
    let dir = std::env::temp_dir();
    save_png(&working, dir.join("leafkit-working.png"))?;
    save_gray_png(&mask.to_gray(), dir.join("leafkit-mask.png"))?;
    println!("saved leafkit-working.png and leafkit-mask.png in {}", dir.display());
    Ok(())
}
