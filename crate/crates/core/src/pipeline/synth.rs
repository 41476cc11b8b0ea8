//! Seeded synthetic leaves for desk-scale evaluation.
//!
//! Each class fixes a mean for every cue: silhouette (aspect ratio, margin
//! serration), blade hue, and venation (midrib width, branch count, branch
//! angle). Samples jitter each cue independently, and neighbouring classes
//! overlap on any single cue, so one feature family alone confuses some
//! pairs while the cues together separate every class.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{save_png, RasterImage};

pub const SYNTH_CLASSES: usize = 8;
pub const SYNTH_SIDE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassProfile {
    /// Major over minor semi-axis.
    pub aspect: f64,
    /// Relative radial amplitude of the margin teeth.
    pub serration: f64,
    pub teeth: f64,
    /// Blade hue in degrees.
    pub hue: f64,
    /// Midrib width in pixels at scale 1.
    pub midrib: f64,
    pub branches: usize,
    /// Angle between secondary veins and the midrib, degrees.
    pub branch_angle: f64,
}

const fn profile(
    aspect: f64,
    serration: f64,
    teeth: f64,
    hue: f64,
    midrib: f64,
    branches: usize,
    branch_angle: f64,
) -> ClassProfile {
    ClassProfile {
        aspect,
        serration,
        teeth,
        hue,
        midrib,
        branches,
        branch_angle,
    }
}

pub const PROFILES: [ClassProfile; SYNTH_CLASSES] = [
    profile(1.6, 0.00, 0.0, 95.0, 3.0, 4, 40.0),
    profile(1.9, 0.00, 0.0, 110.0, 5.0, 6, 55.0),
    profile(2.2, 0.05, 18.0, 85.0, 3.0, 6, 55.0),
    profile(2.5, 0.05, 18.0, 100.0, 5.0, 4, 40.0),
    profile(1.6, 0.05, 18.0, 115.0, 5.0, 5, 65.0),
    profile(1.9, 0.05, 18.0, 90.0, 3.0, 5, 30.0),
    profile(2.2, 0.00, 0.0, 105.0, 5.0, 5, 30.0),
    profile(2.5, 0.00, 0.0, 120.0, 3.0, 5, 65.0),
];

/// Per-sample parameters after jitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafParams {
    pub class: usize,
    pub aspect: f64,
    pub serration: f64,
    pub teeth: f64,
    pub hue: f64,
    pub midrib: f64,
    pub branches: usize,
    pub branch_angle: f64,
    /// Major semi-axis in pixels.
    pub major: f64,
    pub rotation: f64,
    pub center: (f64, f64),
    pub noise: f64,
}

impl LeafParams {
    /// Radius of the outline at polar angle `t` in the leaf frame.
    pub fn radius(&self, t: f64) -> f64 {
        let a = self.major;
        let b = self.major / self.aspect;
        let ellipse = a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt();
        ellipse * (1.0 + self.serration * (self.teeth * t).sin())
    }

    /// `0.5 * integral of r(t)^2` by the midpoint rule.
    pub fn analytic_area(&self) -> f64 {
        let n = 20_000;
        let dt = 2.0 * PI / n as f64;
        (0..n)
            .map(|i| {
                let r = self.radius((i as f64 + 0.5) * dt);
                0.5 * r * r * dt
            })
            .sum()
    }
}

pub struct SynthLeaf {
    pub image: RasterImage,
    pub label: usize,
    pub params: LeafParams,
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Distance from `p` to the segment `a`-`b`.
fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

pub fn sample_params(class: usize, seed: u64) -> Result<LeafParams> {
    let p = PROFILES
        .get(class)
        .ok_or_else(|| Error::InvalidArgument(format!("synthetic class {class} is not in 0..{SYNTH_CLASSES}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ class as u64);
    let mut jitter = |sd: f64| Normal::new(0.0, sd).unwrap().sample(&mut rng);
    let aspect = (p.aspect + jitter(0.10)).max(1.15);
    let serration = (p.serration + jitter(0.015)).max(0.0);
    let hue = p.hue + jitter(6.0);
    let midrib = (p.midrib + jitter(0.7)).max(1.5);
    let branch_angle = p.branch_angle + jitter(5.0);
    let scale = rng.gen_range(0.8..1.2);
    let rotation = rng.gen_range(-40.0f64..40.0).to_radians();
    let branches = (p.branches as i64 + rng.gen_range(-1..=1)).max(2) as usize;
    let half = SYNTH_SIDE as f64 / 2.0;
    Ok(LeafParams {
        class,
        aspect,
        serration,
        teeth: p.teeth,
        hue,
        midrib,
        branches,
        branch_angle,
        major: 0.40 * SYNTH_SIDE as f64 * scale,
        rotation,
        center: (half + rng.gen_range(-6.0..6.0), half + rng.gen_range(-6.0..6.0)),
        noise: 6.0,
    })
}

/// Render the leaf described by `params` on a white canvas.
pub fn render(params: &LeafParams, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let noise = Normal::new(0.0, params.noise).unwrap();
    let (sin, cos) = params.rotation.sin_cos();
    let a = params.major;
    // vein segments in the leaf frame (u across, v along the major axis)
    let mut veins: Vec<((f64, f64), (f64, f64), f64)> = vec![((0.0, -0.95 * a), (0.0, 0.95 * a), params.midrib)];
    let ang = params.branch_angle.to_radians();
    for k in 0..params.branches {
        let v0 = -0.7 * a + 1.4 * a * (k as f64 + 0.5) / params.branches as f64;
        for side in [-1.0, 1.0] {
            let len = 0.9 * a / params.aspect;
            let end = (side * len * ang.sin(), v0 + len * ang.cos());
            veins.push(((0.0, v0), end, 0.6 * params.midrib));
        }
    }
    let blade = hsv_to_rgb(params.hue, 0.65, 0.55);
    let vein_col = hsv_to_rgb(params.hue, 0.45, 0.30);
    RasterImage::from_fn(SYNTH_SIDE, SYNTH_SIDE, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - params.center.0, y as f64 + 0.5 - params.center.1);
        // inverse rotation into the leaf frame; v points up the blade
        let u = cos * dx + sin * dy;
        let v = -(-sin * dx + cos * dy);
        let rho = (u * u + v * v).sqrt();
        let t = v.atan2(u) - PI / 2.0;
        if rho > params.radius(t) {
            return [255, 255, 255];
        }
        let on_vein = veins
            .iter()
            .any(|&(p, q, w)| segment_distance((u, v), p, q) <= 0.5 * w);
        let base = if on_vein { vein_col } else { blade };
        base.map(|c| (c * 255.0 + noise.sample(&mut rng)).round().clamp(0.0, 254.0) as u8)
    })
}

pub fn synth_leaf(class: usize, seed: u64) -> Result<SynthLeaf> {
    let params = sample_params(class, seed)?;
    Ok(SynthLeaf {
        image: render(&params, seed),
        label: class,
        params,
    })
}

/// Write `per_class` PNGs per class into `<dir>/class_<k>/leaf_<k>_<i>.png`.
pub fn write_dataset(dir: &Path, per_class: usize, seed: u64) -> Result<usize> {
    let mut written = 0;
    for class in 0..SYNTH_CLASSES {
        let sub = dir.join(format!("class_{class}"));
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for i in 0..per_class {
            let leaf = synth_leaf(class, seed.wrapping_mul(1_000_003).wrapping_add(i as u64))?;
            save_png(&leaf.image, sub.join(format!("leaf_{class}_{i:03}.png")))?;
            written += 1;
        }
    }
    Ok(written)
}
