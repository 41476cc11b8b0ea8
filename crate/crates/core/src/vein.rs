//! Vein maps from Gaussian smoothing and disk-element grayscale morphology.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Plane};

pub const DEFAULT_KERNEL: usize = 25;
pub const RADII: [usize; 4] = [1, 2, 3, 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
}

/// Sigma implied by a kernel size: `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn sigma_for_kernel(ksize: usize) -> f64 {
    0.3 * ((ksize as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps.
pub fn gaussian_kernel(ksize: usize, sigma: f64) -> Vec<f64> {
    let c = (ksize / 2) as f64;
    let taps: Vec<f64> = (0..ksize)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur_plane(src: &Plane, ksize: usize) -> Result<Plane> {
    if ksize == 0 || ksize.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Gaussian kernel size must be odd, got {ksize}"
        )));
    }
    let taps = gaussian_kernel(ksize, sigma_for_kernel(ksize));
    let half = (ksize / 2) as isize;
    let (w, h) = (src.width(), src.height());
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src.get(clamp(x as isize + k as isize - half, w), y);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp.get(x, clamp(y as isize + k as isize - half, h));
            }
            out.set(x, y, acc);
        }
    }
    Ok(out)
}

pub fn gaussian_blur(gray: &GrayImage, ksize: usize) -> Result<GrayImage> {
    Ok(gaussian_blur_plane(&gray.to_plane(), ksize)?.to_gray())
}

/// Offsets of the disk structuring element `dx^2 + dy^2 <= r^2`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Grayscale min (erode) or max (dilate) filter over a disk, edge replication.
pub fn morph_plane(src: &Plane, op: MorphOp, radius: usize) -> Plane {
    let offsets = disk_offsets(radius);
    let (w, h) = (src.width() as isize, src.height() as isize);
    let mut out = Plane::zeros(src.width(), src.height());
    for y in 0..h {
        for x in 0..w {
            let mut acc = match op {
                MorphOp::Erode => f64::INFINITY,
                MorphOp::Dilate => f64::NEG_INFINITY,
            };
            for &(dx, dy) in &offsets {
                let sx = (x + dx).clamp(0, w - 1) as usize;
                let sy = (y + dy).clamp(0, h - 1) as usize;
                let v = src.get(sx, sy);
                acc = match op {
                    MorphOp::Erode => acc.min(v),
                    MorphOp::Dilate => acc.max(v),
                };
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

pub fn morph(gray: &GrayImage, op: MorphOp, radius: usize) -> Result<GrayImage> {
    if !(1..=4).contains(&radius) {
        return Err(Error::InvalidArgument(format!(
            "structuring element radius must be in 1..=4, got {radius}"
        )));
    }
    Ok(morph_plane(&gray.to_plane(), op, radius).to_gray())
}

pub fn opening(src: &Plane, radius: usize) -> Plane {
    morph_plane(&morph_plane(src, MorphOp::Erode, radius), MorphOp::Dilate, radius)
}

pub fn closing(src: &Plane, radius: usize) -> Plane {
    morph_plane(&morph_plane(src, MorphOp::Dilate, radius), MorphOp::Erode, radius)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VeinConfig {
    pub kernel: usize,
    pub radii: Vec<usize>,
}

impl Default for VeinConfig {
    fn default() -> Self {
        Self {
            kernel: DEFAULT_KERNEL,
            radii: RADII.to_vec(),
        }
    }
}

/// One subtracted plane per radius plus their pixelwise maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct VeinStack {
    pub radii: Vec<usize>,
    pub planes: Vec<Plane>,
    pub fused: Plane,
}

/// Per radius, the larger of the white and black top-hat magnitudes
/// `|open - blur|` and `|close - blur|` of the smoothed image, zeroed outside
/// the leaf. Picks up both light and dark veins.
pub fn extract_vein(gray: &GrayImage, mask: &BinaryMask, cfg: &VeinConfig) -> Result<VeinStack> {
    if gray.width() != mask.width() || gray.height() != mask.height() {
        return Err(Error::Shape {
            context: "extract_vein",
            expected: vec![gray.height(), gray.width()],
            actual: vec![mask.height(), mask.width()],
        });
    }
    if mask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    if cfg.radii.is_empty() || cfg.radii.iter().any(|r| !(1..=4).contains(r)) {
        return Err(Error::InvalidArgument(format!(
            "vein radii must be in 1..=4, got {:?}",
            cfg.radii
        )));
    }
    let blurred = gaussian_blur_plane(&gray.to_plane(), cfg.kernel)?;
    let (w, h) = (gray.width(), gray.height());
    let mut fused = Plane::zeros(w, h);
    let mut planes = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        let open = opening(&blurred, r);
        let close = closing(&blurred, r);
        let mut plane = Plane::zeros(w, h);
        for (i, &fg) in mask.as_raw().iter().enumerate() {
            if !fg {
                continue;
            }
            let b = blurred.as_raw()[i];
            let v = (open.as_raw()[i] - b)
                .abs()
                .max((close.as_raw()[i] - b).abs())
                .clamp(0.0, 255.0);
            plane.as_raw_mut()[i] = v;
            let f = &mut fused.as_raw_mut()[i];
            *f = f.max(v);
        }
        planes.push(plane);
    }
    Ok(VeinStack {
        radii: cfg.radii.clone(),
        planes,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_for_default_kernel() {
        assert!((sigma_for_kernel(25) - 4.1).abs() < 1e-12);
    }

    #[test]
    fn blur_of_constant_is_constant() {
        let g = GrayImage::filled(40, 30, 123);
        assert_eq!(gaussian_blur(&g, 25).unwrap(), g);
        assert!(gaussian_blur(&g, 4).is_err());
    }

    #[test]
    fn impulse_response_is_the_2d_gaussian() {
        let mut p = Plane::zeros(41, 41);
        p.set(20, 20, 1.0);
        let out = gaussian_blur_plane(&p, 25).unwrap();
        let s = 4.1f64;
        // direct evaluation of the normalized sampled 2-D kernel
        let mut norm = 0.0;
        for dy in -12i32..=12 {
            for dx in -12i32..=12 {
                norm += (-((dx * dx + dy * dy) as f64) / (2.0 * s * s)).exp();
            }
        }
        for y in 0..41 {
            for x in 0..41 {
                let (dx, dy) = (x as i32 - 20, y as i32 - 20);
                let expected = if dx.abs() <= 12 && dy.abs() <= 12 {
                    (-((dx * dx + dy * dy) as f64) / (2.0 * s * s)).exp() / norm
                } else {
                    0.0
                };
                assert!((out.get(x, y) - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn blur_preserves_mass_on_interior_support() {
        let mut p = Plane::zeros(80, 80);
        for y in 30..50 {
            for x in 25..55 {
                p.set(x, y, ((x * 7 + y * 3) % 200) as f64);
            }
        }
        let before: f64 = p.as_raw().iter().sum();
        let after: f64 = gaussian_blur_plane(&p, 25).unwrap().as_raw().iter().sum();
        assert!((after - before).abs() / before < 0.005);
    }

    #[test]
    fn disk_elements_nest() {
        assert_eq!(disk_offsets(1).len(), 5);
        for r in 2..=4 {
            let big = disk_offsets(r);
            assert!(disk_offsets(r - 1).iter().all(|o| big.contains(o)));
        }
    }

    #[test]
    fn erode_single_dark_pixel_gives_plus() {
        let mut g = GrayImage::filled(9, 9, 255);
        g.set(4, 4, 0);
        let e = morph(&g, MorphOp::Erode, 1).unwrap();
        let dark: Vec<_> = (0..9)
            .flat_map(|y| (0..9).map(move |x| (x, y)))
            .filter(|&(x, y)| e.get(x, y) == 0)
            .collect();
        assert_eq!(dark, vec![(4, 3), (3, 4), (4, 4), (5, 4), (4, 5)]);
    }

    #[test]
    fn morph_radius_bounds() {
        let g = GrayImage::filled(5, 5, 9);
        assert!(morph(&g, MorphOp::Dilate, 0).is_err());
        assert!(morph(&g, MorphOp::Dilate, 5).is_err());
        assert_eq!(morph(&g, MorphOp::Dilate, 3).unwrap(), g);
    }

    #[test]
    fn flat_leaf_has_no_veins_and_background_is_zero() {
        let g = GrayImage::from_fn(80, 80, |x, y| {
            if (15..65).contains(&x) && (10..70).contains(&y) {
                90
            } else {
                255
            }
        });
        let m = BinaryMask::from_fn(80, 80, |x, y| (15..65).contains(&x) && (10..70).contains(&y));
        let v = extract_vein(&g, &m, &VeinConfig::default()).unwrap();
        for (i, &fg) in m.as_raw().iter().enumerate() {
            if !fg {
                assert_eq!(v.fused.as_raw()[i], 0.0);
            }
        }
        // away from the silhouette the smoothed blade is flat
        for y in 25..55 {
            for x in 30..50 {
                assert!(v.fused.get(x, y) <= 2.0);
            }
        }
        assert_eq!(v.planes.len(), 4);
    }
}
