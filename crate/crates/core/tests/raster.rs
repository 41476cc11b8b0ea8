use leafkit::raster::{binarize, crop_to_content, resize, resize_mask, to_grayscale, BinaryMask, RasterImage};
use proptest::prelude::*;

fn image(w: usize, h: usize, data: Vec<u8>) -> RasterImage {
    RasterImage::new(w, h, data).unwrap()
}

fn image_strategy(max: usize) -> impl Strategy<Value = RasterImage> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| image(w, h, d))
    })
}

fn components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut n = 0;
    for start in 0..w * h {
        if !mask.as_raw()[start] || seen[start] {
            continue;
        }
        n += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
                let (nx, ny) = (x + dx, y + dy);
                if mask.get_signed(nx, ny) {
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    n
}

proptest! {
    #[test]
    fn brightening_never_darkens_gray(
        img in image_strategy(12),
        bump in prop::collection::vec(0u8..=255, 3),
    ) {
        let brighter = RasterImage::from_fn(img.width(), img.height(), |x, y| {
            let p = img.get(x, y);
            [0, 1, 2].map(|c| p[c].saturating_add(bump[c]))
        });
        let (a, b) = (to_grayscale(&img), to_grayscale(&brighter));
        prop_assert!(a.as_raw().iter().zip(b.as_raw()).all(|(x, y)| x <= y));
    }

    #[test]
    fn binarize_keeps_one_component(img in image_strategy(24)) {
        if let Ok(mask) = binarize(&to_grayscale(&img)) {
            prop_assert_eq!(components(&mask), 1);
        }
    }

    #[test]
    fn cropping_is_idempotent(img in image_strategy(16), cut in 0u8..=255) {
        let mask = BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y)[0] > cut);
        prop_assume!(mask.count() > 0);
        let once = crop_to_content(&img, &mask).unwrap();
        let twice = crop_to_content(&once.0, &once.1).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn resize_has_the_requested_shape(img in image_strategy(40), side in 1usize..64) {
        let out = resize(&img, side);
        prop_assert_eq!((out.width(), out.height()), (side, side));
        let m = resize_mask(&BinaryMask::from_fn(img.width(), img.height(), |x, _| x % 2 == 0), side);
        prop_assert_eq!((m.width(), m.height()), (side, side));
    }
}

#[test]
fn dark_leaf_on_white_is_segmented() {
    let img = RasterImage::from_fn(40, 30, |x, y| {
        let (dx, dy) = (x as f64 - 20.0, y as f64 - 15.0);
        if dx * dx / 144.0 + dy * dy / 64.0 <= 1.0 {
            [40, 120, 30]
        } else if x == 2 && y == 2 {
            [10, 10, 10]
        } else {
            [250, 250, 250]
        }
    });
    let mask = binarize(&to_grayscale(&img)).unwrap();
    assert!(!mask.get(2, 2), "speck must be dropped");
    assert!(mask.get(20, 15));
    assert_eq!(components(&mask), 1);
}

#[test]
fn uniform_image_is_rejected() {
    let img = RasterImage::filled(10, 10, [128, 128, 128]);
    assert!(binarize(&to_grayscale(&img)).is_err());
}
