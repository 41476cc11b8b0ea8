//! Contour, geometric, morphological and moment features of a leaf.
//!
//! cargo run --release --example shape_features -- [image.png]

use leafkit::geometry::{geometric_features, moment_features, morphological_features, shape_vector, trace_contour};
use leafkit::pipeline::preprocess;
use leafkit::pipeline::synth::synth_leaf;
use leafkit::raster::{load_image, to_grayscale};

fn main() -> leafkit::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(p) => load_image(p)?,
        None => synth_leaf(0, 1)?.image,
    };
    let (working, mask) = preprocess(&img, 256)?;
    let gray = to_grayscale(&working);
    let contour = trace_contour(&mask)?;
    println!("contour: {} points, chain length {:.1}", contour.len(), contour.chain_length());

    let g = geometric_features(&mask, &contour)?;
    println!(
        "length {:.0}  width {:.0}  area {:.0}  perimeter {:.1}  diameter {:.1}",
        g.length, g.width, g.area, g.perimeter, g.diameter
    );
    let names = ["aspect", "form factor", "rectangularity", "narrow factor", "P/D", "P/(L+W)"];
    for (n, v) in names.iter().zip(morphological_features(&g)) {
        println!("{n:>15}: {v:.4}");
    }
    let m = moment_features(&gray, &mask)?;
    println!("m00 {:.1}, normalized central moments {:.3?}", m.spatial[0], m.normalized);
    println!("shape vector has {} values", shape_vector(&gray, &mask, &contour)?.as_slice().len());
    Ok(())
}
