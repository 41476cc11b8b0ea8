//! Per-dimension standardization fitted on a training split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `z = (x - mean) / scale`. Dimensions with zero variance keep `scale = 1`,
/// so they are centered but not scaled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of each column.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot fit a standardizer on zero rows".into()))?;
        let d = first.as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::Shape {
                    context: "Standardizer::fit",
                    expected: vec![d],
                    actual: vec![r.len()],
                });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Shape {
                context: "Standardizer::transform",
                expected: vec![self.dim()],
                actual: vec![row.len()],
            });
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance() {
        let rows = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 9.0]];
        let s = Standardizer::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.transform(r).unwrap()).collect();
        for c in 0..3 {
            let m: f64 = z.iter().map(|r| r[c]).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12);
        }
        for c in [0, 2] {
            let v: f64 = z.iter().map(|r| r[c] * r[c]).sum::<f64>() / 3.0;
            assert!((v - 1.0).abs() < 1e-12);
        }
        // constant column is centered only
        assert!(z.iter().all(|r| r[1] == 0.0));
        assert_eq!(s.scale[1], 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let s = Standardizer::fit(&[vec![1.0, 2.0]]).unwrap();
        assert!(s.transform(&[1.0]).is_err());
        assert!(Standardizer::fit::<Vec<f64>>(&[]).is_err());
    }
}
