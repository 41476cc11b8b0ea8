//! Gray-level co-occurrence matrices and the fourteen Haralick statistics.
//!
//! Gray levels are indexed from 1 in every formula (so the sum distribution
//! `p_{x+y}` runs over 2..=2N and the difference distribution over 0..N-1).
//! Entropies use the natural logarithm with `0 log 0 = 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

pub const HARALICK_LEN: usize = 14;

pub const FEATURE_NAMES: [&str; HARALICK_LEN] = [
    "angular_second_moment",
    "contrast",
    "correlation",
    "sum_of_squares_variance",
    "inverse_difference_moment",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_measure_correlation_1",
    "info_measure_correlation_2",
    "maximal_correlation_coefficient",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GlcmConfig {
    pub levels: usize,
    pub distance: usize,
    /// Offsets in degrees; only multiples of 45 are meaningful.
    pub angles: Vec<u32>,
    pub symmetric: bool,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        Self {
            levels: 32,
            distance: 1,
            angles: vec![0, 45, 90, 135],
            symmetric: true,
        }
    }
}

impl GlcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.levels) {
            return Err(Error::InvalidArgument(format!(
                "GLCM levels must be in 2..=256, got {}",
                self.levels
            )));
        }
        if self.distance == 0 {
            return Err(Error::InvalidArgument("GLCM distance must be >= 1".into()));
        }
        if self.angles.is_empty() {
            return Err(Error::InvalidArgument("GLCM needs at least one angle".into()));
        }
        for &a in &self.angles {
            if a % 45 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "GLCM angle {a} is not a multiple of 45 degrees"
                )));
            }
        }
        Ok(())
    }
}

/// Pixel offset `(dx, dy)` for an angle, y pointing down (45 degrees is up-right).
pub fn angle_offset(angle: u32, distance: usize) -> (isize, isize) {
    let d = distance as isize;
    match angle % 180 {
        0 => (d, 0),
        45 => (d, -d),
        90 => (0, -d),
        135 => (-d, -d),
        other => panic!("unsupported GLCM angle {other}"),
    }
}

/// Normalized co-occurrence matrix, row-major `levels x levels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
    pair_count: u64,
}

impl Glcm {
    /// Wrap an existing probability matrix. Entries must be non-negative and
    /// sum to one within 1e-9.
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Degenerate(format!("GLCM needs N >= 2, got {levels}")));
        }
        if p.len() != levels * levels {
            return Err(Error::Shape {
                context: "Glcm::from_probabilities",
                expected: vec![levels, levels],
                actual: vec![p.len()],
            });
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("GLCM entries must be finite and >= 0".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("GLCM sums to {total}, not 1")));
        }
        Ok(Self {
            levels,
            p,
            pair_count: 0,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

#[inline]
fn quantize(v: u8, levels: usize) -> usize {
    v as usize * levels / 256
}

/// Raw counts for one offset; pairs need both endpoints in the foreground.
fn count_pairs(gray: &GrayImage, mask: &BinaryMask, offset: (isize, isize), cfg: &GlcmConfig) -> (Vec<f64>, u64) {
    let n = cfg.levels;
    let mut counts = vec![0.0; n * n];
    let mut pairs = 0u64;
    let (w, h) = (gray.width() as isize, gray.height() as isize);
    for y in 0..h {
        for x in 0..w {
            let (x2, y2) = (x + offset.0, y + offset.1);
            if x2 < 0 || y2 < 0 || x2 >= w || y2 >= h {
                continue;
            }
            if !mask.get(x as usize, y as usize) || !mask.get(x2 as usize, y2 as usize) {
                continue;
            }
            let i = quantize(gray.get(x as usize, y as usize), n);
            let j = quantize(gray.get(x2 as usize, y2 as usize), n);
            counts[i * n + j] += 1.0;
            if cfg.symmetric {
                counts[j * n + i] += 1.0;
            }
            pairs += 1;
        }
    }
    (counts, pairs)
}

/// One normalized matrix per configured angle; angles without any valid
/// foreground pair are skipped.
pub fn glcms_per_angle(gray: &GrayImage, mask: &BinaryMask, cfg: &GlcmConfig) -> Result<Vec<Glcm>> {
    cfg.validate()?;
    if gray.width() != mask.width() || gray.height() != mask.height() {
        return Err(Error::Shape {
            context: "glcm",
            expected: vec![gray.height(), gray.width()],
            actual: vec![mask.height(), mask.width()],
        });
    }
    if mask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    let mut out = Vec::new();
    for &angle in &cfg.angles {
        let (counts, pairs) = count_pairs(gray, mask, angle_offset(angle, cfg.distance), cfg);
        let total: f64 = counts.iter().sum();
        if total == 0.0 {
            continue;
        }
        out.push(Glcm {
            levels: cfg.levels,
            p: counts.iter().map(|c| c / total).collect(),
            pair_count: pairs,
        });
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no foreground pixel pair at the configured offsets".into()));
    }
    Ok(out)
}

/// Per-angle normalized matrices averaged into a single GLCM.
pub fn compute_glcm(gray: &GrayImage, mask: &BinaryMask, cfg: &GlcmConfig) -> Result<Glcm> {
    let per_angle = glcms_per_angle(gray, mask, cfg)?;
    let n = cfg.levels;
    let k = per_angle.len() as f64;
    let mut p = vec![0.0; n * n];
    for g in &per_angle {
        for (acc, v) in p.iter_mut().zip(&g.p) {
            *acc += v / k;
        }
    }
    Ok(Glcm {
        levels: n,
        p,
        pair_count: per_angle.iter().map(|g| g.pair_count).sum(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaralickIntermediates {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    /// Index `k` holds `p_{x+y}(k + 2)`.
    pub p_sum: Vec<f64>,
    /// Index `k` holds `p_{x-y}(k)`.
    pub p_diff: Vec<f64>,
    pub hx: f64,
    pub hy: f64,
    pub hxy: f64,
    pub hxy1: f64,
    pub hxy2: f64,
    /// Eigenvalues of Q in descending order (empty rows/columns removed).
    pub q_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaralickVector {
    pub features: [f64; HARALICK_LEN],
    pub intermediates: HaralickIntermediates,
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

pub fn haralick_features(g: &Glcm) -> Result<HaralickVector> {
    let n = g.levels;
    if n < 2 {
        return Err(Error::Degenerate(format!("GLCM needs N >= 2, got {n}")));
    }
    let lvl = |i: usize| (i + 1) as f64;

    let mut p_x = vec![0.0; n];
    let mut p_y = vec![0.0; n];
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let p = g.get(i, j);
            p_x[i] += p;
            p_y[j] += p;
            p_sum[i + j] += p;
            p_diff[i.abs_diff(j)] += p;
        }
    }
    let mu_x: f64 = (0..n).map(|i| lvl(i) * p_x[i]).sum();
    let mu_y: f64 = (0..n).map(|j| lvl(j) * p_y[j]).sum();
    let sigma_x = (0..n).map(|i| (lvl(i) - mu_x).powi(2) * p_x[i]).sum::<f64>().sqrt();
    let sigma_y = (0..n).map(|j| (lvl(j) - mu_y).powi(2) * p_y[j]).sum::<f64>().sqrt();

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut sum_ij = 0.0;
    let mut variance = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = g.get(i, j);
            let d = lvl(i) - lvl(j);
            asm += p * p;
            contrast += d * d * p;
            sum_ij += lvl(i) * lvl(j) * p;
            variance += (lvl(i) - mu_x).powi(2) * p;
            idm += p / (1.0 + d * d);
            entropy -= plogp(p);
            let pxy = p_x[i] * p_y[j];
            if p > 0.0 {
                hxy1 -= p * pxy.ln();
            }
            hxy2 -= plogp(pxy);
        }
    }
    let correlation = if sigma_x * sigma_y > 0.0 {
        (sum_ij - mu_x * mu_y) / (sigma_x * sigma_y)
    } else {
        0.0
    };

    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, &p)| (k + 2) as f64 * p).sum();
    let sum_variance: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &p)| ((k + 2) as f64 - sum_average).powi(2) * p)
        .sum();
    let sum_entropy: f64 = -p_sum.iter().map(|&p| plogp(p)).sum::<f64>();
    let diff_mean: f64 = p_diff.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let diff_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &p)| (k as f64 - diff_mean).powi(2) * p)
        .sum();
    let diff_entropy: f64 = -p_diff.iter().map(|&p| plogp(p)).sum::<f64>();

    let hx: f64 = -p_x.iter().map(|&p| plogp(p)).sum::<f64>();
    let hy: f64 = -p_y.iter().map(|&p| plogp(p)).sum::<f64>();
    let hxy = entropy;
    let hmax = hx.max(hy);
    let imc1 = if hmax > 0.0 { (hxy - hxy1) / hmax } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    let q_eigenvalues = q_spectrum(g, &p_x, &p_y);
    let lambda2 = q_eigenvalues.get(1).copied().unwrap_or(0.0);
    let mcc = lambda2.clamp(0.0, 1.0).sqrt();

    Ok(HaralickVector {
        features: [
            asm,
            contrast,
            correlation,
            variance,
            idm,
            sum_average,
            sum_variance,
            sum_entropy,
            entropy,
            diff_variance,
            diff_entropy,
            imc1,
            imc2,
            mcc,
        ],
        intermediates: HaralickIntermediates {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
            p_x,
            p_y,
            p_sum,
            p_diff,
            hx,
            hy,
            hxy,
            hxy1,
            hxy2,
            q_eigenvalues,
        },
    })
}

/// Eigenvalues of `Q(i,j) = sum_k p(i,k) p(j,k) / (p_x(i) p_y(k))`, descending.
///
/// Q is similar to the symmetric `D^{-1/2} A D^{-1/2}` with `D = diag(p_x)`
/// and `A(i,j) = sum_k p(i,k) p(j,k) / p_y(k)`, which is what gets solved.
fn q_spectrum(g: &Glcm, p_x: &[f64], p_y: &[f64]) -> Vec<f64> {
    let n = g.levels;
    let rows: Vec<usize> = (0..n).filter(|&i| p_x[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&k| p_y[k] > 0.0).collect();
    let m = rows.len();
    if m == 0 {
        return Vec::new();
    }
    let mut s = DMatrix::<f64>::zeros(m, m);
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in rows.iter().enumerate().skip(a) {
            let mut acc = 0.0;
            for &k in &cols {
                acc += g.get(i, k) * g.get(j, k) / p_y[k];
            }
            let v = acc / (p_x[i].sqrt() * p_x[j].sqrt());
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Texture vector: Haralick features computed per angle, then averaged.
pub fn texture_features(gray: &GrayImage, mask: &BinaryMask, cfg: &GlcmConfig) -> Result<[f64; HARALICK_LEN]> {
    let per_angle = glcms_per_angle(gray, mask, cfg)?;
    let mut acc = [0.0; HARALICK_LEN];
    for g in &per_angle {
        let h = haralick_features(g)?;
        for (a, f) in acc.iter_mut().zip(h.features) {
            *a += f;
        }
    }
    let k = per_angle.len() as f64;
    Ok(acc.map(|a| a / k))
}
