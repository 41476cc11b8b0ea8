//! Colour-space conversion and per-channel moment statistics over the leaf.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RasterImage};

pub const COLOR_STATS_LEN: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    Hsv,
    Hsl,
}

impl ColorSpace {
    pub const ALL: [ColorSpace; 3] = [ColorSpace::Rgb, ColorSpace::Hsv, ColorSpace::Hsl];

    pub fn channel_names(self) -> [&'static str; 3] {
        match self {
            ColorSpace::Rgb => ["r", "g", "b"],
            ColorSpace::Hsv => ["h", "s", "v"],
            ColorSpace::Hsl => ["h", "s", "l"],
        }
    }
}

/// Hue in degrees [0, 360); 0 for achromatic pixels.
fn hue(r: f64, g: f64, b: f64, max: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    if h < 0.0 {
        h + 360.0
    } else if h >= 360.0 {
        h - 360.0
    } else {
        h
    }
}

/// Hexcone HSV: `H` in degrees, `S` and `V` in [0, 1].
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    [hue(r, g, b, max, delta), s, max]
}

/// Bi-hexcone HSL: `H` in degrees, `S` and `L` in [0, 1].
pub fn rgb_to_hsl(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let l = 0.5 * (max + min);
    let s = if delta == 0.0 {
        0.0
    } else {
        delta / (1.0 - (2.0 * l - 1.0).abs())
    };
    [hue(r, g, b, max, delta), s.min(1.0), l]
}

/// Per-pixel conversion into the target space, as three planes in raster order.
/// RGB is returned in its raw 0..255 scale.
pub fn convert_color_space(img: &RasterImage, target: ColorSpace) -> [Vec<f64>; 3] {
    let n = img.width() * img.height();
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for px in img.pixels() {
        let v = convert_pixel(px, target);
        for c in 0..3 {
            planes[c].push(v[c]);
        }
    }
    planes
}

#[inline]
fn convert_pixel(px: [u8; 3], space: ColorSpace) -> [f64; 3] {
    match space {
        ColorSpace::Rgb => px.map(|c| c as f64),
        ColorSpace::Hsv => rgb_to_hsv(px),
        ColorSpace::Hsl => rgb_to_hsl(px),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl ChannelStats {
    pub fn to_array(self) -> [f64; 4] {
        [self.mean, self.variance, self.skewness, self.kurtosis]
    }
}

/// Population mean, variance, skewness and excess kurtosis. Skewness and
/// kurtosis are 0 when the variance is 0.
pub fn channel_stats(values: &[f64]) -> Result<ChannelStats> {
    if values.is_empty() {
        return Err(Error::Degenerate("statistics of an empty channel".into()));
    }
    if values.iter().all(|&v| v == values[0]) {
        // exact constant: avoid round-off in the mean leaking into sigma
        return Ok(ChannelStats {
            mean: values[0],
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sigma = variance.sqrt();
    let (skewness, kurtosis) = if sigma > 0.0 {
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for x in values {
            let z = (x - mean) / sigma;
            let z2 = z * z;
            m3 += z2 * z;
            m4 += z2 * z2;
        }
        (m3 / n, m4 / n - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(ChannelStats {
        mean,
        variance,
        skewness,
        kurtosis,
    })
}

/// 36 values: (RGB, HSV, HSL) x 3 channels x (mean, variance, skewness,
/// kurtosis), over foreground pixels only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorStatsVector(pub [f64; COLOR_STATS_LEN]);

impl ColorStatsVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn color_features(img: &RasterImage, mask: &BinaryMask) -> Result<ColorStatsVector> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::Shape {
            context: "color_features",
            expected: vec![img.height(), img.width()],
            actual: vec![mask.height(), mask.width()],
        });
    }
    let leaf: Vec<[u8; 3]> = img
        .pixels()
        .zip(mask.as_raw())
        .filter(|(_, &m)| m)
        .map(|(p, _)| p)
        .collect();
    if leaf.is_empty() {
        return Err(Error::EmptyForeground);
    }
    let mut out = [0.0; COLOR_STATS_LEN];
    let mut channel = vec![0.0; leaf.len()];
    for (s, space) in ColorSpace::ALL.iter().enumerate() {
        let converted: Vec<[f64; 3]> = leaf.iter().map(|&p| convert_pixel(p, *space)).collect();
        for c in 0..3 {
            for (dst, v) in channel.iter_mut().zip(&converted) {
                *dst = v[c];
            }
            let stats = channel_stats(&channel)?.to_array();
            let base = (s * 3 + c) * 4;
            out[base..base + 4].copy_from_slice(&stats);
        }
    }
    Ok(ColorStatsVector(out))
}
