//! Quadratic-time discrete Fourier transforms.

use num_complex::Complex64;
use std::f64::consts::PI;

pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let m = x.len();
    (0..m)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / m as f64))
                .sum()
        })
        .collect()
}

pub fn naive_inverse(x: &[Complex64]) -> Vec<Complex64> {
    let m = x.len();
    (0..m)
        .map(|n| {
            x.iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, 2.0 * PI * (k * n) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
        .collect()
}
