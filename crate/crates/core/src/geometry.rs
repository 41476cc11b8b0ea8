//! Orientation alignment, contour tracing and the 35-value shape vector
//! (5 geometric + 6 morphological + 24 moment features).

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::raster::{sample_bilinear, BinaryMask, GrayImage, RasterImage};

/// Eigenvalue ratio below which a leaf counts as isotropic and is not rotated.
pub const ROTATION_GATE: f64 = 1.2;

pub const SHAPE_LEN: usize = 35;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalAxes {
    /// Major-axis angle in image coordinates (x right, y down), in (-pi/2, pi/2].
    pub angle: f64,
    pub major: f64,
    pub minor: f64,
    pub centroid: (f64, f64),
}

impl PrincipalAxes {
    pub fn is_isotropic(&self) -> bool {
        self.major < ROTATION_GATE * self.minor
    }
}

/// Second-order statistics of the foreground coordinates.
pub fn principal_axes(mask: &BinaryMask) -> Result<PrincipalAxes> {
    let n = mask.count();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "principal axis needs at least 2 foreground pixels, got {n}"
        )));
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (x, y) in mask.foreground() {
        sx += x as f64;
        sy += y as f64;
    }
    let (cx, cy) = (sx / n as f64, sy / n as f64);
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for (x, y) in mask.foreground() {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    let nf = n as f64;
    let (a, b, c) = (cxx / nf, cxy / nf, cyy / nf);
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let mut angle = 0.5 * (2.0 * b).atan2(a - c);
    if angle <= -FRAC_PI_2 {
        angle += PI;
    }
    Ok(PrincipalAxes {
        angle,
        major: mid + rad,
        minor: (mid - rad).max(0.0),
        centroid: (cx, cy),
    })
}

/// Angle of the first principal component of the foreground coordinates.
pub fn principal_axis(mask: &BinaryMask) -> Result<f64> {
    principal_axes(mask).map(|p| p.angle)
}

/// Rotate about the foreground centroid so the major axis becomes vertical.
///
/// The canvas grows to hold the whole rotated frame. Near-isotropic masks
/// (eigenvalue ratio under [`ROTATION_GATE`]) are returned unchanged.
pub fn align_upright(img: &RasterImage, mask: &BinaryMask) -> Result<(RasterImage, BinaryMask)> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::Shape {
            context: "align_upright",
            expected: vec![img.height(), img.width()],
            actual: vec![mask.height(), mask.width()],
        });
    }
    let axes = principal_axes(mask)?;
    let phi = FRAC_PI_2 - axes.angle;
    if axes.is_isotropic() || phi.abs() < 1e-12 {
        return Ok((img.clone(), mask.clone()));
    }
    Ok(rotate_pair(img, mask, phi, axes.centroid))
}

/// Rotate image (bilinear) and mask (nearest) by `phi` radians about `center`.
pub fn rotate_pair(
    img: &RasterImage,
    mask: &BinaryMask,
    phi: f64,
    center: (f64, f64),
) -> (RasterImage, BinaryMask) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (s, c) = phi.sin_cos();
    let (cx, cy) = center;
    let corners = [(-0.5, -0.5), (w - 0.5, -0.5), (-0.5, h - 0.5), (w - 0.5, h - 0.5)];
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (px, py) in corners {
        let (dx, dy) = (px - cx, py - cy);
        let rx = c * dx - s * dy;
        let ry = s * dx + c * dy;
        min_x = min_x.min(rx);
        min_y = min_y.min(ry);
        max_x = max_x.max(rx);
        max_y = max_y.max(ry);
    }
    let out_w = ((max_x - min_x) - 1e-9).ceil().max(1.0) as usize;
    let out_h = ((max_y - min_y) - 1e-9).ceil().max(1.0) as usize;

    let mut out_img = RasterImage::filled(out_w, out_h, [255, 255, 255]);
    let mut out_mask = BinaryMask::from_fn(out_w, out_h, |_, _| false);
    for oy in 0..out_h {
        let ry = min_y + oy as f64 + 0.5;
        for ox in 0..out_w {
            let rx = min_x + ox as f64 + 0.5;
            // inverse rotation back into the source frame
            let px = cx + c * rx + s * ry;
            let py = cy - s * rx + c * ry;
            if px < -0.5 || py < -0.5 || px > w - 0.5 || py > h - 0.5 {
                continue;
            }
            let v = sample_bilinear(img, px, py);
            out_img.set(ox, oy, v.map(|ch| ch.round().clamp(0.0, 255.0) as u8));
            let nx = (px.round() as isize).clamp(0, img.width() as isize - 1);
            let ny = (py.round() as isize).clamp(0, img.height() as isize - 1);
            out_mask.set(ox, oy, mask.get(nx as usize, ny as usize));
        }
    }
    (out_img, out_mask)
}

/// Closed 8-connected boundary, clockwise on screen (y down). The start point
/// is not repeated at the end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    points: Vec<(usize, usize)>,
}

impl Contour {
    pub fn new(points: Vec<(usize, usize)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Degenerate(format!(
                "contour needs at least 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len();
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            let dx = a.0.abs_diff(b.0);
            let dy = a.1.abs_diff(b.1);
            if dx > 1 || dy > 1 || (dx == 0 && dy == 0) {
                return Err(Error::InvalidArgument(format!(
                    "contour points {a:?} and {b:?} are not 8-neighbours"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        true
    }

    /// Closed chain length: 1 per axis step, sqrt(2) per diagonal step.
    pub fn chain_length(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                if a.0 != b.0 && a.1 != b.1 {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                }
            })
            .sum()
    }
}

// Moore neighbourhood, clockwise on screen starting west.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(dx: isize, dy: isize) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is a Moore neighbour")
}

/// Moore-neighbour tracing of the outer boundary of the first component met
/// in raster order, stopped by Jacob's criterion (start pixel re-entered from
/// the same side).
pub fn trace_contour(mask: &BinaryMask) -> Result<Contour> {
    if mask.count() < 3 {
        return Err(Error::Degenerate(format!(
            "contour tracing needs at least 3 foreground pixels, got {}",
            mask.count()
        )));
    }
    let (sx, sy) = mask.foreground().next().ok_or(Error::EmptyForeground)?;
    let start = (sx as isize, sy as isize);

    // Stop once the walk leaves the start pixel along its very first step
    // again; returning to the start alone is not enough when the start
    // pixel is a cut vertex of the boundary.
    let mut points = vec![(sx, sy)];
    let mut p = start;
    let mut back = 0usize; // west of the first raster pixel is background
    let mut first_step = None;
    let limit = 4 * mask.width() * mask.height() + 16;
    for _ in 0..limit {
        let mut next = None;
        for k in 1..=8 {
            let d = (back + k) % 8;
            let q = (p.0 + MOORE[d].0, p.1 + MOORE[d].1);
            if mask.get_signed(q.0, q.1) {
                let prev = (back + k - 1) % 8;
                let b = (p.0 + MOORE[prev].0, p.1 + MOORE[prev].1);
                next = Some((q, moore_index(b.0 - q.0, b.1 - q.1)));
                break;
            }
        }
        let Some((q, q_back)) = next else {
            return Err(Error::Degenerate("isolated foreground pixel".into()));
        };
        if p == start {
            match first_step {
                None => first_step = Some(q),
                Some(f) if f == q => {
                    points.pop();
                    return Contour::new(points);
                }
                Some(_) => {}
            }
        }
        points.push((q.0 as usize, q.1 as usize));
        p = q;
        back = q_back;
    }
    Err(Error::Degenerate("contour tracing did not close".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricFeatures {
    pub length: f64,
    pub width: f64,
    pub area: f64,
    pub perimeter: f64,
    pub diameter: f64,
}

impl GeometricFeatures {
    /// Derive the equivalent-area diameter `sqrt(4A/pi)` from raw measurements.
    pub fn from_measurements(length: f64, width: f64, area: f64, perimeter: f64) -> Self {
        Self {
            length,
            width,
            area,
            perimeter,
            diameter: (4.0 * area / PI).sqrt(),
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.length, self.width, self.area, self.perimeter, self.diameter]
    }
}

/// Length/width are the vertical/horizontal foreground extents of an upright
/// mask; area is the pixel count; perimeter is the contour chain length.
pub fn geometric_features(mask: &BinaryMask, contour: &Contour) -> Result<GeometricFeatures> {
    let (x0, y0, x1, y1) = mask.bounding_box().ok_or(Error::EmptyForeground)?;
    Ok(GeometricFeatures::from_measurements(
        (y1 - y0 + 1) as f64,
        (x1 - x0 + 1) as f64,
        mask.count() as f64,
        contour.chain_length(),
    ))
}

/// `[L/W, 4piA/P^2, LW/A, D/L, P/D, P/(L+W)]`.
pub fn morphological_features(g: &GeometricFeatures) -> [f64; 6] {
    [
        g.length / g.width,
        4.0 * PI * g.area / (g.perimeter * g.perimeter),
        g.length * g.width / g.area,
        g.diameter / g.length,
        g.perimeter / g.diameter,
        g.perimeter / (g.length + g.width),
    ]
}

/// Exponent pairs `(i, j)` of the spatial moments, in output order.
pub const SPATIAL_ORDERS: [(i32, i32); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 0),
    (1, 1),
    (1, 2),
    (2, 0),
    (2, 1),
    (3, 0),
];

/// Exponent pairs of the central and normalized central moments.
pub const CENTRAL_ORDERS: [(i32, i32); 7] = [(0, 2), (0, 3), (1, 1), (1, 2), (2, 0), (2, 1), (3, 0)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentFeatures {
    pub spatial: [f64; 10],
    pub central: [f64; 7],
    pub normalized: [f64; 7],
}

impl MomentFeatures {
    pub fn to_array(&self) -> [f64; 24] {
        let mut out = [0.0; 24];
        out[..10].copy_from_slice(&self.spatial);
        out[10..17].copy_from_slice(&self.central);
        out[17..].copy_from_slice(&self.normalized);
        out
    }
}

/// Moments of an arbitrary real intensity raster (row-major, `x` = column).
pub fn moments_of(width: usize, height: usize, intensity: &[f64]) -> Result<MomentFeatures> {
    if intensity.len() != width * height {
        return Err(Error::Shape {
            context: "moments_of",
            expected: vec![height, width],
            actual: vec![intensity.len()],
        });
    }
    let mut raw = [[0.0f64; 4]; 4];
    for y in 0..height {
        let yf = y as f64;
        let ys = [1.0, yf, yf * yf, yf * yf * yf];
        for x in 0..width {
            let v = intensity[y * width + x];
            if v == 0.0 {
                continue;
            }
            let xf = x as f64;
            let xs = [1.0, xf, xf * xf, xf * xf * xf];
            for i in 0..4 {
                for j in 0..4 - i {
                    raw[i][j] += xs[i] * ys[j] * v;
                }
            }
        }
    }
    let m00 = raw[0][0];
    if m00 <= 0.0 {
        return Err(Error::Degenerate("zeroth moment is zero".into()));
    }
    let xbar = raw[1][0] / m00;
    let ybar = raw[0][1] / m00;

    let mut central = [[0.0f64; 4]; 4];
    for y in 0..height {
        let dy = y as f64 - ybar;
        let ys = [1.0, dy, dy * dy, dy * dy * dy];
        for x in 0..width {
            let v = intensity[y * width + x];
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - xbar;
            let xs = [1.0, dx, dx * dx, dx * dx * dx];
            for i in 0..4 {
                for j in 0..4 - i {
                    central[i][j] += xs[i] * ys[j] * v;
                }
            }
        }
    }

    let spatial = SPATIAL_ORDERS.map(|(i, j)| raw[i as usize][j as usize]);
    let mu = CENTRAL_ORDERS.map(|(i, j)| central[i as usize][j as usize]);
    let mut normalized = [0.0; 7];
    for (k, &(i, j)) in CENTRAL_ORDERS.iter().enumerate() {
        normalized[k] = mu[k] / m00.powf(1.0 + (i + j) as f64 / 2.0);
    }
    Ok(MomentFeatures {
        spatial,
        central: mu,
        normalized,
    })
}

/// Moments of the grayscale image restricted to the foreground, intensities
/// scaled to [0, 1].
pub fn moment_features(gray: &GrayImage, mask: &BinaryMask) -> Result<MomentFeatures> {
    if gray.width() != mask.width() || gray.height() != mask.height() {
        return Err(Error::Shape {
            context: "moment_features",
            expected: vec![gray.height(), gray.width()],
            actual: vec![mask.height(), mask.width()],
        });
    }
    let intensity: Vec<f64> = gray
        .as_raw()
        .iter()
        .zip(mask.as_raw())
        .map(|(&v, &m)| if m { v as f64 / 255.0 } else { 0.0 })
        .collect();
    moments_of(gray.width(), gray.height(), &intensity)
}

/// Geometric, morphological and moment features in their fixed order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeVector(pub [f64; SHAPE_LEN]);

impl ShapeVector {
    pub fn assemble(g: &GeometricFeatures, m: &MomentFeatures) -> Self {
        let mut v = [0.0; SHAPE_LEN];
        v[..5].copy_from_slice(&g.to_array());
        v[5..11].copy_from_slice(&morphological_features(g));
        v[11..].copy_from_slice(&m.to_array());
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Full shape vector for an upright, cropped leaf.
pub fn shape_vector(gray: &GrayImage, mask: &BinaryMask, contour: &Contour) -> Result<ShapeVector> {
    let g = geometric_features(mask, contour)?;
    let m = moment_features(gray, mask)?;
    Ok(ShapeVector::assemble(&g, &m))
}
