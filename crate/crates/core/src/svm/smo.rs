//! Binary soft-margin SVM dual solved by sequential minimal optimization.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 100_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            context: "rbf_kernel",
            expected: vec![x.len()],
            actual: vec![y.len()],
        });
    }
    Ok((-gamma * squared_distance(x, y)).exp())
}

/// Lexicographic order on (features, label) used to make training
/// independent of the order samples arrive in.
pub(crate) fn canonical_order<L: PartialOrd>(x: &[Vec<f64>], labels: &[L]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then_with(|| labels[a].partial_cmp(&labels[b]).unwrap_or(Ordering::Equal))
    });
    idx
}

/// Raw SMO result in the order the Gram matrix was given.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal violation `m(alpha) - M(alpha)`.
    pub gap: f64,
    pub objective: f64,
}

/// Solve `min 0.5 a'Qa - e'a` s.t. `0 <= a <= C`, `y'a = 0`, with
/// `Q_ij = y_i y_j K_ij`, using maximal-violating-pair selection.
pub fn solve(gram: &[f64], y: &[f64], c: f64, cfg: &SmoConfig) -> Result<SmoSolution> {
    let n = y.len();
    if gram.len() != n * n {
        return Err(Error::Shape {
            context: "SMO Gram matrix",
            expected: vec![n, n],
            actual: vec![gram.len()],
        });
    }
    if !(c > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("C = {c} and tol = {} must be positive", cfg.tol)));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) || y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument("labels must be +1/-1 with both present".into()));
    }
    let k = |i: usize, j: usize| gram[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let (gap, m_up, m_low) = loop {
        let mut i = usize::MAX;
        let mut m = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut big_m = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m {
                m = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < big_m {
                big_m = v;
                j = t;
            }
        }
        let gap = m - big_m;
        if gap < cfg.tol {
            break (gap, m, big_m);
        }
        if iterations >= cfg.max_iter {
            return Err(Error::Convergence { iterations, gap });
        }
        iterations += 1;

        let curvature = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(TAU);
        let mut step = gap / curvature;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        // snap to the box to keep set membership exact
        for t in [i, j] {
            if alpha[t] < c * 1e-12 {
                alpha[t] = 0.0;
            } else if alpha[t] > c * (1.0 - 1e-12) {
                alpha[t] = c;
            }
        }
        for t in 0..n {
            grad[t] += y[t] * step * (k(t, i) - k(t, j));
        }
    };

    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .map(|t| -y[t] * grad[t])
        .collect();
    let bias = if free.is_empty() {
        0.5 * (m_up + m_low)
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    Ok(SmoSolution {
        alpha,
        bias,
        iterations,
        gap,
        objective,
    })
}

/// Dual objective `0.5 a'Qa - e'a` evaluated directly.
pub fn dual_objective(gram: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i * n + j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinarySvm {
    pub support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * (-self.gamma * squared_distance(s, x)).exp())
            .sum::<f64>()
            + self.bias
    }
}

/// Fitted binary machine together with the full multiplier vector in the
/// caller's sample order.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryFit {
    pub svm: BinarySvm,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub objective: f64,
}

pub fn gram_matrix(x: &[&[f64]], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        g[i * n + i] = 1.0;
        for j in 0..i {
            let v = (-gamma * squared_distance(x[i], x[j])).exp();
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    g
}

pub(crate) fn fit_from_gram(
    rows: &[&[f64]],
    y: &[f64],
    gram: &[f64],
    c: f64,
    gamma: f64,
    cfg: &SmoConfig,
) -> Result<BinaryFit> {
    let sol = solve(gram, y, c, cfg)?;
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support.push(rows[t].to_vec());
            coef.push(a * y[t]);
        }
    }
    Ok(BinaryFit {
        svm: BinarySvm {
            support,
            coef,
            bias: sol.bias,
            gamma,
            c,
        },
        alpha: sol.alpha,
        iterations: sol.iterations,
        gap: sol.gap,
        objective: sol.objective,
    })
}

/// Train on `x` with labels in {-1, +1}. Samples are put in a canonical
/// order first, so the result does not depend on input order.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, cfg: &SmoConfig) -> Result<BinaryFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArgument(format!("{} samples with {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Shape {
            context: "train_binary",
            expected: vec![d],
            actual: vec![r.len()],
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let order = canonical_order(x, y);
    let rows: Vec<&[f64]> = order.iter().map(|&i| x[i].as_slice()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let gram = gram_matrix(&rows, gamma);
    let mut fit = fit_from_gram(&rows, &ys, &gram, c, gamma, cfg)?;
    let mut alpha = vec![0.0; x.len()];
    for (k, &i) in order.iter().enumerate() {
        alpha[i] = fit.alpha[k];
    }
    fit.alpha = alpha;
    Ok(fit)
}

/// Largest violation of the KKT conditions in terms of `y f(x)`, per sample
/// class: `alpha = 0` needs `y f >= 1`, `0 < alpha < C` needs `y f = 1`,
/// `alpha = C` needs `y f <= 1`.
pub fn kkt_violation(fit: &BinaryFit, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let c = fit.svm.c;
    x.iter()
        .zip(y)
        .zip(&fit.alpha)
        .map(|((xi, &yi), &a)| {
            let margin = yi * fit.svm.decision(xi);
            if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}
