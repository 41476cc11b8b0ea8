//! Pixel containers and the preprocessing primitives shared by every branch:
//! decoding, grayscale conversion, Otsu binarization, cropping and resizing.

use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit RGB image, stored interleaved row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// 8-bit single-channel image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// Foreground mask; `true` marks leaf pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

/// Real-valued single-channel plane used where rounding to 8 bits would lose
/// information (blurring, morphology, moments).
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

fn check_dims(width: usize, height: usize, len: usize, per_pixel: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if width * height * per_pixel != len {
        return Err(Error::Shape {
            context: "image buffer",
            expected: vec![height, width, per_pixel],
            actual: vec![len],
        });
    }
    Ok(())
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Foreground pixel coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Tight bounding box `(x0, y0, x1, y1)`, inclusive; `None` when empty.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (x, y) in self.foreground() {
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }

    /// Render as a black-on-white grayscale image (leaf black).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| if v { 0 } else { 255 }).collect(),
        }
    }
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[f64] {
        &self.data
    }

    pub fn as_raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Round and clamp into an 8-bit image.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        }
    }
}

/// Decode a PNG or JPEG file into RGB; any alpha channel is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    RasterImage::new(w as usize, h as usize, rgb.into_raw())
}

pub fn save_png(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(
        path,
        &img.data,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(
        path,
        &img.data,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Luma with weights 0.2989 R + 0.5870 G + 0.1140 B, rounded.
pub fn to_grayscale(img: &RasterImage) -> GrayImage {
    let data = img
        .pixels()
        .map(|[r, g, b]| {
            let v = 0.2989 * r as f64 + 0.5870 * g as f64 + 0.1140 * b as f64;
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Otsu threshold `t`: pixels `<= t` form the dark class.
///
/// When several thresholds share the maximal between-class variance (flat
/// plateau between two modes), the midpoint of the plateau is returned.
pub fn otsu_threshold(gray: &GrayImage) -> Result<u8> {
    let mut hist = [0u64; 256];
    for &v in &gray.data {
        hist[v as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    if let Some(v) = hist.iter().position(|&c| c as usize == gray.data.len()) {
        return Err(Error::DegenerateHistogram { value: v as u8 });
    }

    let mut best = f64::NEG_INFINITY;
    let mut first = 0usize;
    let mut last = 0usize;
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for t in 0..255 {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        // n0*n1*(mu0 - mu1)^2, up to the constant 1/total^2
        let diff = s0 as f64 * n1 as f64 - s1 as f64 * n0 as f64;
        let score = diff * diff / (n0 as f64 * n1 as f64);
        if score > best {
            best = score;
            first = t;
            last = t;
        } else if score == best {
            last = t;
        }
    }
    Ok(((first + last) / 2) as u8)
}

/// Keep only the largest 8-connected foreground component. Ties go to the
/// component met first in raster order.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut label = vec![0u32; w * h];
    let mut next = 0u32;
    let mut best_label = 0u32;
    let mut best_size = 0usize;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.data[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data[j] && label[j] == 0 {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
        if size > best_size {
            best_size = size;
            best_label = next;
        }
    }
    BinaryMask {
        width: w,
        height: h,
        data: label.iter().map(|&l| l != 0 && l == best_label).collect(),
    }
}

/// Otsu threshold, dark pixels as leaf, then the largest 8-connected component.
pub fn binarize(gray: &GrayImage) -> Result<BinaryMask> {
    let t = otsu_threshold(gray)?;
    let raw = BinaryMask {
        width: gray.width,
        height: gray.height,
        data: gray.data.iter().map(|&v| v <= t).collect(),
    };
    let mask = largest_component(&raw);
    if mask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    Ok(mask)
}

/// Crop both image and mask to the tight bounding box of the foreground.
pub fn crop_to_content(img: &RasterImage, mask: &BinaryMask) -> Result<(RasterImage, BinaryMask)> {
    if img.width != mask.width || img.height != mask.height {
        return Err(Error::Shape {
            context: "crop_to_content",
            expected: vec![img.height, img.width],
            actual: vec![mask.height, mask.width],
        });
    }
    let (x0, y0, x1, y1) = mask.bounding_box().ok_or(Error::EmptyForeground)?;
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let cropped = RasterImage::from_fn(cw, ch, |x, y| img.get(x0 + x, y0 + y));
    let cmask = BinaryMask::from_fn(cw, ch, |x, y| mask.get(x0 + x, y0 + y));
    Ok((cropped, cmask))
}

pub fn crop_mask(mask: &BinaryMask) -> Result<BinaryMask> {
    let (x0, y0, x1, y1) = mask.bounding_box().ok_or(Error::EmptyForeground)?;
    Ok(BinaryMask::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| {
        mask.get(x0 + x, y0 + y)
    }))
}

/// Bilinear sample at continuous pixel-center coordinates, clamped to the edge.
#[inline]
pub fn sample_bilinear(img: &RasterImage, x: f64, y: f64) -> [f64; 3] {
    let xc = x.clamp(0.0, (img.width - 1) as f64);
    let yc = y.clamp(0.0, (img.height - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let p00 = img.get(x0, y0);
    let p10 = img.get(x1, y0);
    let p01 = img.get(x0, y1);
    let p11 = img.get(x1, y1);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

/// Size of the content region when the longer side is scaled to `side`.
fn fitted_dims(width: usize, height: usize, side: usize) -> (usize, usize) {
    if width >= height {
        let h = ((height as f64 * side as f64 / width as f64).round() as usize).clamp(1, side);
        (side, h)
    } else {
        let w = ((width as f64 * side as f64 / height as f64).round() as usize).clamp(1, side);
        (w, side)
    }
}

/// Scale so the longer side equals `side` (bilinear, half-pixel centers) and
/// pad the shorter side with white, centered.
pub fn resize(img: &RasterImage, side: usize) -> RasterImage {
    assert!(side >= 1, "resize side must be positive");
    let (cw, ch) = fitted_dims(img.width, img.height, side);
    let sx = img.width as f64 / cw as f64;
    let sy = img.height as f64 / ch as f64;
    let ox = (side - cw) / 2;
    let oy = (side - ch) / 2;
    let mut out = RasterImage::filled(side, side, [255, 255, 255]);
    for y in 0..ch {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..cw {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let v = sample_bilinear(img, src_x, src_y);
            out.set(
                ox + x,
                oy + y,
                v.map(|c| c.round().clamp(0.0, 255.0) as u8),
            );
        }
    }
    out
}

/// Mask counterpart of [`resize`]: nearest-neighbour sampling, background padding.
pub fn resize_mask(mask: &BinaryMask, side: usize) -> BinaryMask {
    assert!(side >= 1, "resize side must be positive");
    let (cw, ch) = fitted_dims(mask.width, mask.height, side);
    let sx = mask.width as f64 / cw as f64;
    let sy = mask.height as f64 / ch as f64;
    let ox = (side - cw) / 2;
    let oy = (side - ch) / 2;
    let mut out = BinaryMask {
        width: side,
        height: side,
        data: vec![false; side * side],
    };
    for y in 0..ch {
        let src_y = (((y as f64 + 0.5) * sy) as usize).min(mask.height - 1);
        for x in 0..cw {
            let src_x = (((x as f64 + 0.5) * sx) as usize).min(mask.width - 1);
            out.set(ox + x, oy + y, mask.get(src_x, src_y));
        }
    }
    out
}

/// Box-filter downsample of a square-ish plane set to `side`x`side`; each
/// output pixel averages the source area it covers (fractional weights).
pub fn downsample_area(src: &Plane, side: usize) -> Plane {
    assert!(side >= 1, "downsample side must be positive");
    let sx = src.width as f64 / side as f64;
    let sy = src.height as f64 / side as f64;
    let weights = |n_src: usize, scale: f64, i: usize| -> Vec<(usize, f64)> {
        let a = i as f64 * scale;
        let b = (i + 1) as f64 * scale;
        let mut v = Vec::new();
        let mut k = a.floor() as usize;
        while (k as f64) < b && k < n_src {
            let lo = a.max(k as f64);
            let hi = b.min(k as f64 + 1.0);
            if hi > lo {
                v.push((k, hi - lo));
            }
            k += 1;
        }
        v
    };
    let cols: Vec<_> = (0..side).map(|i| weights(src.width, sx, i)).collect();
    let rows: Vec<_> = (0..side).map(|i| weights(src.height, sy, i)).collect();
    let mut out = Plane::zeros(side, side);
    for (y, rw) in rows.iter().enumerate() {
        for (x, cwts) in cols.iter().enumerate() {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for &(ry, wy) in rw {
                for &(cx, wx) in cwts {
                    acc += src.get(cx, ry) * wx * wy;
                    wsum += wx * wy;
                }
            }
            out.set(x, y, if wsum > 0.0 { acc / wsum } else { 0.0 });
        }
    }
    out
}

/// Split an RGB image into three real planes (R, G, B).
pub fn rgb_planes(img: &RasterImage) -> [Plane; 3] {
    let mut planes = [
        Plane::zeros(img.width, img.height),
        Plane::zeros(img.width, img.height),
        Plane::zeros(img.width, img.height),
    ];
    for (i, px) in img.pixels().enumerate() {
        for c in 0..3 {
            planes[c].data[i] = px[c] as f64;
        }
    }
    planes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_examples() {
        let img = RasterImage::new(3, 1, vec![255, 255, 255, 0, 0, 0, 100, 50, 200]).unwrap();
        let g = to_grayscale(&img);
        assert_eq!(g.as_raw(), &[255, 0, 82]);
    }

    #[test]
    fn rejects_zero_sized_and_mismatched_buffers() {
        assert!(RasterImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(BinaryMask::new(2, 1, vec![true]).is_err());
    }

    #[test]
    fn otsu_bimodal_picks_dark_mode() {
        let g = GrayImage::from_fn(20, 10, |x, _| if x < 10 { 10 } else { 240 });
        // brute-force scan: every t in [10, 239] separates the modes perfectly
        let t = otsu_threshold(&g).unwrap();
        assert!((10..240).contains(&t));
        let m = binarize(&g).unwrap();
        for y in 0..10 {
            for x in 0..20 {
                assert_eq!(m.get(x, y), x < 10);
            }
        }
    }

    #[test]
    fn otsu_matches_exhaustive_variance_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = GrayImage::from_fn(32, 32, |_, _| {
            if rng.gen_bool(0.4) {
                rng.gen_range(20..90)
            } else {
                rng.gen_range(150..230)
            }
        });
        let t = otsu_threshold(&g).unwrap() as usize;
        // independent between-class variance from class means
        let var_at = |t: usize| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for &v in g.as_raw() {
                if (v as usize) <= t {
                    a.push(v as f64)
                } else {
                    b.push(v as f64)
                }
            }
            if a.is_empty() || b.is_empty() {
                return 0.0;
            }
            let n = g.as_raw().len() as f64;
            let (wa, wb) = (a.len() as f64 / n, b.len() as f64 / n);
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            wa * wb * (ma - mb).powi(2)
        };
        let best = (0..255).map(var_at).fold(f64::MIN, f64::max);
        assert!((var_at(t) - best).abs() <= 1e-9 * best);
    }

    #[test]
    fn constant_image_is_degenerate() {
        let g = GrayImage::filled(5, 5, 255);
        assert!(matches!(
            binarize(&g),
            Err(Error::DegenerateHistogram { value: 255 })
        ));
    }

    #[test]
    fn dark_patch_on_light_field() {
        let g = GrayImage::from_fn(30, 30, |x, y| {
            if (5..15).contains(&x) && (8..20).contains(&y) {
                30
            } else {
                220
            }
        });
        let m = binarize(&g).unwrap();
        assert_eq!(m.count(), 120);
        assert_eq!(m.bounding_box(), Some((5, 8, 14, 19)));
    }

    #[test]
    fn only_largest_blob_survives() {
        let g = GrayImage::from_fn(40, 40, |x, y| {
            let big = (2..12).contains(&x) && (2..12).contains(&y);
            let small = (30..35).contains(&x) && y == 30;
            if big || small {
                0
            } else {
                255
            }
        });
        let m = binarize(&g).unwrap();
        assert_eq!(m.count(), 100);
        assert!(!m.get(31, 30));
    }

    #[test]
    fn diagonal_pixels_are_connected() {
        let m = BinaryMask::from_fn(4, 4, |x, y| x == y);
        assert_eq!(largest_component(&m).count(), 4);
    }

    #[test]
    fn crop_cases() {
        let img = RasterImage::filled(10, 10, [1, 2, 3]);
        let m = BinaryMask::from_fn(10, 10, |x, y| x == 7 && y == 3);
        let (ci, cm) = crop_to_content(&img, &m).unwrap();
        assert_eq!((ci.width(), ci.height(), cm.count()), (1, 1, 1));

        let full = BinaryMask::from_fn(10, 10, |_, _| true);
        let (ci, _) = crop_to_content(&img, &full).unwrap();
        assert_eq!(ci, img);

        let img = RasterImage::from_fn(100, 100, |x, y| [x as u8, y as u8, 0]);
        let rect = BinaryMask::from_fn(100, 100, |x, y| (45..55).contains(&x) && (40..60).contains(&y));
        let (ci, cm) = crop_to_content(&img, &rect).unwrap();
        assert_eq!((ci.width(), ci.height()), (10, 20));
        assert_eq!(ci.get(0, 0), [45, 40, 0]);
        assert_eq!(cm.count(), 200);

        let empty = BinaryMask::from_fn(4, 4, |_, _| false);
        assert!(matches!(
            crop_to_content(&RasterImage::filled(4, 4, [0; 3]), &empty),
            Err(Error::EmptyForeground)
        ));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = RasterImage::from_fn(16, 16, |x, y| [(x * 13) as u8, (y * 7) as u8, 9]);
        assert_eq!(resize(&img, 16), img);
        let c = RasterImage::filled(7, 7, [10, 120, 30]);
        assert!(resize(&c, 23).pixels().all(|p| p == [10, 120, 30]));
    }

    #[test]
    fn resize_pads_with_white() {
        let img = RasterImage::filled(20, 10, [0, 0, 0]);
        let r = resize(&img, 40);
        assert_eq!((r.width(), r.height()), (40, 40));
        assert_eq!(r.get(20, 0), [255, 255, 255]);
        assert_eq!(r.get(20, 20), [0, 0, 0]);
        assert_eq!(r.get(20, 39), [255, 255, 255]);
    }

    #[test]
    fn checkerboard_upsample_matches_direct_bilinear_formula() {
        let vals = [[0u8, 200], [200, 0]];
        let img = RasterImage::from_fn(2, 2, |x, y| [vals[y][x]; 3]);
        let r = resize(&img, 4);
        for y in 0..4 {
            for x in 0..4 {
                // half-pixel centers: source coordinate (i + 0.5)/2 - 0.5, clamped to [0, 1]
                let u = ((x as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
                let v = ((y as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, 1.0);
                let f = (1.0 - u) * (1.0 - v) * 0.0
                    + u * (1.0 - v) * 200.0
                    + (1.0 - u) * v * 200.0
                    + u * v * 0.0;
                assert_eq!(r.get(x, y)[0], f.round() as u8, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn area_downsample_averages_blocks() {
        let p = Plane::new(4, 4, (0..16).map(|v| v as f64).collect()).unwrap();
        let d = downsample_area(&p, 2);
        assert_eq!(d.as_raw(), &[2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn png_round_trip_is_bit_identical() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let img = RasterImage::from_fn(16, 16, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.png");
        save_png(&img, &p).unwrap();
        assert_eq!(load_image(&p).unwrap(), img);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_image(dir.path().join("missing.png")),
            Err(Error::Io { .. })
        ));
        let bad = dir.path().join("bad.png");
        std::fs::write(&bad, b"not an image").unwrap();
        assert!(matches!(load_image(&bad), Err(Error::Format { .. })));
    }

    #[test]
    fn white_and_red_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.png");
        save_png(&RasterImage::filled(2, 2, [255; 3]), &p).unwrap();
        assert!(load_image(&p).unwrap().as_raw().iter().all(|&v| v == 255));
        let p = dir.path().join("r.png");
        save_png(&RasterImage::filled(1, 1, [255, 0, 0]), &p).unwrap();
        assert_eq!(load_image(&p).unwrap().get(0, 0), [255, 0, 0]);
    }
}
