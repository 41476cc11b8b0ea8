//! Straight-line Haralick transcription with 1-based gray levels. Sum
//! variance is taken around the sum average and difference variance is the
//! variance of the difference distribution.

use nalgebra::DMatrix;

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// `p[i-1][j-1]` holds p(i, j).
pub fn reference_features(p: &[Vec<f64>]) -> [f64; 14] {
    let n = p.len();
    let at = |i: usize, j: usize| p[i - 1][j - 1];

    let px = |i: usize| (1..=n).map(|j| at(i, j)).sum::<f64>();
    let py = |j: usize| (1..=n).map(|i| at(i, j)).sum::<f64>();
    let mu_x = (1..=n).map(|i| i as f64 * px(i)).sum::<f64>();
    let mu_y = (1..=n).map(|j| j as f64 * py(j)).sum::<f64>();
    let sd_x = (1..=n).map(|i| (i as f64 - mu_x).powi(2) * px(i)).sum::<f64>().sqrt();
    let sd_y = (1..=n).map(|j| (j as f64 - mu_y).powi(2) * py(j)).sum::<f64>().sqrt();

    let mut f1 = 0.0;
    let mut f2 = 0.0;
    let mut sum_ij = 0.0;
    let mut f4 = 0.0;
    let mut f5 = 0.0;
    let mut f9 = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let v = at(i, j);
            let d = i as f64 - j as f64;
            f1 += v * v;
            f2 += d.abs().powi(2) * v;
            sum_ij += (i * j) as f64 * v;
            f4 += (i as f64 - mu_x).powi(2) * v;
            f5 += v / (1.0 + d * d);
            f9 -= xlogx(v);
        }
    }
    let f3 = (sum_ij - mu_x * mu_y) / (sd_x * sd_y);

    let p_sum = |k: usize| {
        let mut s = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                if i + j == k {
                    s += at(i, j);
                }
            }
        }
        s
    };
    let p_diff = |k: usize| {
        let mut s = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                if i.abs_diff(j) == k {
                    s += at(i, j);
                }
            }
        }
        s
    };
    let f6 = (2..=2 * n).map(|k| k as f64 * p_sum(k)).sum::<f64>();
    let f7 = (2..=2 * n).map(|k| (k as f64 - f6).powi(2) * p_sum(k)).sum::<f64>();
    let f8 = -(2..=2 * n).map(|k| xlogx(p_sum(k))).sum::<f64>();
    let diff_mean = (0..n).map(|k| k as f64 * p_diff(k)).sum::<f64>();
    let f10 = (0..n).map(|k| (k as f64 - diff_mean).powi(2) * p_diff(k)).sum::<f64>();
    let f11 = -(0..n).map(|k| xlogx(p_diff(k))).sum::<f64>();

    let hx = -(1..=n).map(|i| xlogx(px(i))).sum::<f64>();
    let hy = -(1..=n).map(|j| xlogx(py(j))).sum::<f64>();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 1..=n {
        for j in 1..=n {
            let q = px(i) * py(j);
            if q > 0.0 {
                hxy1 -= at(i, j) * q.ln();
                hxy2 -= q * q.ln();
            }
        }
    }
    let f12 = (f9 - hxy1) / hx.max(hy);
    let f13 = (1.0 - (-2.0 * (hxy2 - f9)).exp()).sqrt();

    let q = DMatrix::from_fn(n, n, |r, c| {
        let (i, j) = (r + 1, c + 1);
        (1..=n)
            .map(|k| {
                let den = px(i) * py(k);
                if den > 0.0 {
                    at(i, k) * at(j, k) / den
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    });
    let mut eig: Vec<f64> = q.complex_eigenvalues().iter().map(|z| z.re).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let f14 = eig[1].max(0.0).sqrt();

    [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]
}
