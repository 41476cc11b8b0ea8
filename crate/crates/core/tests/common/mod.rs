#![allow(dead_code)]

pub mod dft;
pub mod gradcheck;
pub mod haralick;
pub mod qp;

/// `|a - b| <= tol * max(|b|, floor)`.
pub fn close_rel(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(floor)
}
