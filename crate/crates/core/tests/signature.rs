mod common;

use common::dft::{naive_dft, naive_inverse};
use leafkit::geometry::trace_contour;
use leafkit::raster::{crop_mask, BinaryMask};
use leafkit::signature::{
    descriptors_from_signature, fft, fft_in_place, fourier_descriptors, radial_signature, xy_projection,
    PROJECTION_LEN,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn fft_matches_naive_dft_on_length_64() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    for _ in 0..50 {
        let x = random_signal(64, &mut rng);
        let got = fft(&x).unwrap();
        let want = naive_dft(&x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() <= 1e-9 * w.norm().max(1e-6), "{g} vs {w}");
        }
    }
}

#[test]
fn parseval_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(65);
    for n in [2usize, 8, 64, 128, 1024] {
        let x = random_signal(n, &mut rng);
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = fft(&x).unwrap().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        assert!((time - freq).abs() <= 1e-6 * time, "{time} vs {freq}");
    }
}

#[test]
fn inverse_recovers_the_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let x = random_signal(128, &mut rng);
    let spectrum = fft(&x).unwrap();
    // inverse through the forward transform of the conjugate
    let mut buf: Vec<Complex64> = spectrum.iter().map(|c| c.conj()).collect();
    fft_in_place(&mut buf).unwrap();
    let back: Vec<f64> = buf.iter().map(|c| c.conj().re / 128.0).collect();
    let oracle = naive_inverse(&spectrum);
    for i in 0..128 {
        assert!((back[i] - x[i]).abs() <= 1e-9);
        assert!((oracle[i].re - x[i]).abs() <= 1e-9);
    }
}

#[test]
fn non_power_of_two_is_rejected() {
    assert!(fft(&[1.0, 2.0, 3.0]).is_err());
    assert!(fft(&[1.0]).is_err());
}

#[test]
fn circle_descriptors_are_small() {
    let mask = BinaryMask::from_fn(81, 81, |x, y| {
        let (dx, dy) = (x as f64 - 40.0, y as f64 - 40.0);
        dx * dx + dy * dy <= 900.0
    });
    let fd = fourier_descriptors(&trace_contour(&mask).unwrap(), 16).unwrap();
    assert_eq!(fd.as_slice().len(), 16);
    assert!(fd.as_slice().iter().all(|&v| v < 0.02), "{:?}", fd.as_slice());
    let sig = radial_signature(&trace_contour(&mask).unwrap()).unwrap();
    assert_eq!(sig.r.len(), 128);
}

proptest! {
    #[test]
    fn descriptors_ignore_the_starting_point(
        r in prop::collection::vec(1.0f64..10.0, 64),
        shift in 0usize..64,
    ) {
        let mut shifted = r.clone();
        shifted.rotate_left(shift);
        let a = descriptors_from_signature(&r, 16).unwrap();
        let b = descriptors_from_signature(&shifted, 16).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_is_bounded_and_translation_free(
        w in 3usize..40, h in 3usize..40, dx in 0usize..20, dy in 0usize..20,
    ) {
        let place = |ox: usize, oy: usize| {
            BinaryMask::from_fn(80, 80, |x, y| {
                x >= ox && y >= oy && x < ox + w && y < oy + h && (x - ox) * h >= (y - oy) * w / 2
            })
        };
        let a = xy_projection(&crop_mask(&place(1, 2)).unwrap()).unwrap();
        let b = xy_projection(&crop_mask(&place(1 + dx, 2 + dy)).unwrap()).unwrap();
        prop_assert_eq!(a.as_slice().len(), PROJECTION_LEN);
        prop_assert!(a.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(a, b);
    }
}
