//! Centroid-distance signature, Fourier descriptors and the xy-projection
//! histogram.
//!
//! cargo run --release --example fourier_projection -- [image.png]

use leafkit::geometry::trace_contour;
use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::load_image;
use leafkit::signature::{descriptors_from_signature, radial_signature, xy_projection, PROJECTION_BINS};

fn bar(v: f64) -> String {
    "#".repeat((v * 40.0).round() as usize)
}

fn main() -> leafkit::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(p) => load_image(p)?,
        None => synth_leaf(4, 9)?.image,
    };
    let (_, mask) = preprocess(&img, 256)?;
    let sig = radial_signature(&trace_contour(&mask)?)?;
    let (lo, hi) = sig.r.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    println!("signature: {} samples, radius {lo:.1}..{hi:.1}", sig.r.len());
    let fd = descriptors_from_signature(&sig.r, 16)?;
    for (k, v) in fd.as_slice().iter().enumerate() {
        println!("|F({:>2})|/|F(0)| = {v:.5}", k + 1);
    }
    let h = xy_projection(&mask)?;
    println!("column strips:");
    for v in &h.as_slice()[..PROJECTION_BINS] {
        println!("  {v:.2} {}", bar(*v));
    }
    println!("row strips:");
    for v in &h.as_slice()[PROJECTION_BINS..] {
        println!("  {v:.2} {}", bar(*v));
    }
    Ok(())
}
