//! Centroid-distance Fourier descriptors and xy-projection histograms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Contour;
use crate::raster::BinaryMask;

pub const SIGNATURE_POINTS: usize = 128;
pub const DEFAULT_DESCRIPTORS: usize = 16;
pub const PROJECTION_BINS: usize = 30;
pub const PROJECTION_LEN: usize = 2 * PROJECTION_BINS;

/// Distances from the boundary centroid, resampled uniformly in arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialSignature {
    pub r: Vec<f64>,
    pub centroid: (f64, f64),
}

pub fn radial_signature(contour: &Contour) -> Result<RadialSignature> {
    radial_signature_with(contour, SIGNATURE_POINTS)
}

pub fn radial_signature_with(contour: &Contour, samples: usize) -> Result<RadialSignature> {
    if !samples.is_power_of_two() || samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "signature length must be a power of two, got {samples}"
        )));
    }
    let pts = contour.points();
    let c = pts.len();
    if c < 3 {
        return Err(Error::Degenerate("contour has fewer than 3 points".into()));
    }
    let cx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / c as f64;
    let cy = pts.iter().map(|p| p.1 as f64).sum::<f64>() / c as f64;

    // cumulative arc length along the closed polygon
    let mut cum = Vec::with_capacity(c + 1);
    cum.push(0.0);
    for i in 0..c {
        let (a, b) = (pts[i], pts[(i + 1) % c]);
        let d = ((a.0 as f64 - b.0 as f64).powi(2) + (a.1 as f64 - b.1 as f64).powi(2)).sqrt();
        cum.push(cum[i] + d);
    }
    let total = cum[c];
    if total <= 0.0 {
        return Err(Error::Degenerate("contour has zero length".into()));
    }

    let mut r = Vec::with_capacity(samples);
    let mut seg = 0usize;
    for m in 0..samples {
        let s = total * m as f64 / samples as f64;
        while seg + 1 < c && cum[seg + 1] <= s {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[(seg + 1) % c]);
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let x = a.0 as f64 + t * (b.0 as f64 - a.0 as f64);
        let y = a.1 as f64 + t * (b.1 as f64 - a.1 as f64);
        r.push(((x - cx).powi(2) + (y - cy).powi(2)).sqrt());
    }
    Ok(RadialSignature {
        r,
        centroid: (cx, cy),
    })
}

/// In-place iterative radix-2 decimation-in-time transform,
/// `X_k = sum_n x_n exp(-2 pi i k n / M)`.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "FFT length must be a power of two >= 2, got {n}"
        )));
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len *= 2;
    }
    Ok(())
}

pub fn fft(x: &[f64]) -> Result<Vec<Complex64>> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf)?;
    Ok(buf)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierVector(pub Vec<f64>);

impl FourierVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `|F(1)|..|F(k)|` divided by `|F(0)|` for a signature.
pub fn descriptors_from_signature(r: &[f64], k: usize) -> Result<FourierVector> {
    if k == 0 || k >= r.len() / 2 {
        return Err(Error::InvalidArgument(format!(
            "descriptor count must be in 1..{}, got {k}",
            r.len() / 2
        )));
    }
    let spectrum = fft(r)?;
    let dc = spectrum[0].norm();
    if dc == 0.0 {
        return Err(Error::Degenerate("signature has zero mean radius".into()));
    }
    Ok(FourierVector(spectrum[1..=k].iter().map(|c| c.norm() / dc).collect()))
}

pub fn fourier_descriptors(contour: &Contour, k: usize) -> Result<FourierVector> {
    let sig = radial_signature(contour)?;
    descriptors_from_signature(&sig.r, k)
}

/// Strip boundaries for `bins` equal partitions of `n` pixels, each at least
/// one pixel wide.
fn strips(n: usize, bins: usize) -> Vec<(usize, usize)> {
    (0..bins)
        .map(|i| {
            let mut a = (2 * i * n + bins) / (2 * bins);
            let mut b = (2 * (i + 1) * n + bins) / (2 * bins);
            a = a.min(n - 1);
            if b <= a {
                b = a + 1;
            }
            (a, b.min(n))
        })
        .collect()
}

/// 30 column strips (vertical projection) then 30 row strips (horizontal
/// projection); each entry is the leaf-pixel fraction of its strip.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionHistogram(pub [f64; PROJECTION_LEN]);

impl ProjectionHistogram {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn xy_projection(mask: &BinaryMask) -> Result<ProjectionHistogram> {
    if mask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    let (w, h) = (mask.width(), mask.height());
    let mut col_counts = vec![0usize; w];
    let mut row_counts = vec![0usize; h];
    for (x, y) in mask.foreground() {
        col_counts[x] += 1;
        row_counts[y] += 1;
    }
    let mut out = [0.0; PROJECTION_LEN];
    for (i, (a, b)) in strips(w, PROJECTION_BINS).into_iter().enumerate() {
        let fg: usize = col_counts[a..b].iter().sum();
        out[i] = fg as f64 / ((b - a) * h) as f64;
    }
    for (i, (a, b)) in strips(h, PROJECTION_BINS).into_iter().enumerate() {
        let fg: usize = row_counts[a..b].iter().sum();
        out[PROJECTION_BINS + i] = fg as f64 / ((b - a) * w) as f64;
    }
    Ok(ProjectionHistogram(out))
}
