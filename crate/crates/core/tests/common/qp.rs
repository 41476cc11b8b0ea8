//! Reference solver for the SVM dual: accelerated projected gradient on
//! `0 <= a <= C, y'a = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Euclidean projection onto the box intersected with the hyperplane,
/// by bisection on the multiplier of `y'a = 0`.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - nu * yi).clamp(0.0, c)).collect() };
    let h = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

pub fn dual_value(q: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * a[j] * q[i * n + j];
        }
    }
    0.5 * s - a.iter().sum::<f64>()
}

/// Minimum of the dual for the Gram matrix `k` and labels `y`.
pub fn reference_dual(k: &[f64], y: &[f64], c: f64, iterations: usize) -> f64 {
    let n = y.len();
    let q: Vec<f64> = (0..n * n).map(|t| y[t / n] * y[t % n] * k[t]).collect();
    // Lipschitz constant by power iteration
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i * n + j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lip = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (lip * 1.01);
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i * n + j] * z[j]).sum::<f64>() - 1.0).collect();
        let next = project(&z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect::<Vec<_>>(), y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(n1, a0)| n1 + (t - 1.0) / t_next * (n1 - a0)).collect();
        a = next;
        t = t_next;
    }
    dual_value(&q, &a)
}

pub struct Problem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub c: f64,
    pub gamma: f64,
}

/// Random noisy two-class problems with n in 10..=40.
pub fn random_problems(count: usize, seed: u64) -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = rng.gen_range(10..=40);
            let d = rng.gen_range(2..=5);
            let mut x = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let label = if i % 2 == 0 { 1.0 } else { -1.0 };
                let row: Vec<f64> = (0..d)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z + 0.8 * label
                    })
                    .collect();
                x.push(row);
                y.push(label);
            }
            Problem {
                x,
                y,
                c: [0.5, 1.0, 10.0][k % 3],
                gamma: 1.0 / d as f64,
            }
        })
        .collect()
}
