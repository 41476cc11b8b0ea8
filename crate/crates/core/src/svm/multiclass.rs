//! One-vs-one multiclass SVM, grid search and the model file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::smo::{canonical_order, fit_from_gram, kkt_violation, squared_distance, BinarySvm, SmoConfig};
use crate::container::Container;
use crate::error::{Error, Result};
use crate::scaler::Standardizer;

/// Machine for the class pair `(pos, neg)`, `pos < neg`; positive decision
/// values vote for `pos`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMachine {
    pub pos: usize,
    pub neg: usize,
    pub svm: BinarySvm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    /// Class labels seen in training, ascending.
    pub classes: Vec<usize>,
    pub c: f64,
    pub gamma: f64,
    pub scaler: Standardizer,
    pub machines: Vec<PairMachine>,
    /// Largest KKT violation over every pair machine at training time.
    pub kkt_violation: f64,
}

/// Squared distances between every pair of rows.
fn distance_matrix(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = squared_distance(&rows[i], &rows[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Standardized training rows in canonical order, ready for repeated fits.
struct Prepared {
    rows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<usize>,
    dist: Vec<f64>,
    scaler: Standardizer,
}

impl Prepared {
    fn new(x: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        if x.len() != labels.len() || x.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} samples with {} labels",
                x.len(),
                labels.len()
            )));
        }
        let order = canonical_order(x, labels);
        let raw: Vec<&Vec<f64>> = order.iter().map(|&i| &x[i]).collect();
        let scaler = Standardizer::fit(&raw)?;
        let rows: Vec<Vec<f64>> = raw.iter().map(|r| scaler.transform(r)).collect::<Result<_>>()?;
        let labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::InvalidArgument("multiclass SVM needs at least two classes".into()));
        }
        let dist = distance_matrix(&rows);
        Ok(Self {
            rows,
            labels,
            classes,
            dist,
            scaler,
        })
    }

    fn fit(&self, c: f64, gamma: f64, cfg: &SmoConfig) -> Result<SvmModel> {
        if !(c > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("C = {c} and gamma = {gamma} must be positive")));
        }
        let n = self.rows.len();
        let mut machines = Vec::new();
        let mut worst: f64 = 0.0;
        for (a, &pos) in self.classes.iter().enumerate() {
            for &neg in &self.classes[a + 1..] {
                let idx: Vec<usize> = (0..n).filter(|&i| self.labels[i] == pos || self.labels[i] == neg).collect();
                let m = idx.len();
                let mut gram = vec![0.0; m * m];
                for (p, &i) in idx.iter().enumerate() {
                    for (q, &j) in idx.iter().enumerate() {
                        gram[p * m + q] = (-gamma * self.dist[i * n + j]).exp();
                    }
                }
                let rows: Vec<&[f64]> = idx.iter().map(|&i| self.rows[i].as_slice()).collect();
                let y: Vec<f64> = idx
                    .iter()
                    .map(|&i| if self.labels[i] == pos { 1.0 } else { -1.0 })
                    .collect();
                let fit = fit_from_gram(&rows, &y, &gram, c, gamma, cfg)?;
                let owned: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
                worst = worst.max(kkt_violation(&fit, &owned, &y));
                machines.push(PairMachine { pos, neg, svm: fit.svm });
            }
        }
        Ok(SvmModel {
            classes: self.classes.clone(),
            c,
            gamma,
            scaler: self.scaler.clone(),
            machines,
            kkt_violation: worst,
        })
    }
}

impl SvmModel {
    /// Fit a standardizer on `x` and train one machine per class pair.
    pub fn train(x: &[Vec<f64>], labels: &[usize], c: f64, gamma: f64, cfg: &SmoConfig) -> Result<Self> {
        Prepared::new(x, labels)?.fit(c, gamma, cfg)
    }

    /// Majority vote over pair machines; ties go to the larger summed
    /// signed margin, then to the smaller class label.
    pub fn predict_one(&self, x: &[f64]) -> Result<usize> {
        let z = self.scaler.transform(x)?;
        let k = self.classes.len();
        let pos_of = |label: usize| self.classes.binary_search(&label).expect("known class");
        let mut votes = vec![0usize; k];
        let mut margin = vec![0.0; k];
        for m in &self.machines {
            let d = m.svm.decision(&z);
            let (p, q) = (pos_of(m.pos), pos_of(m.neg));
            if d > 0.0 {
                votes[p] += 1;
            } else {
                votes[q] += 1;
            }
            margin[p] += d;
            margin[q] -= d;
        }
        let mut best = 0;
        for i in 1..k {
            if votes[i] > votes[best] || (votes[i] == votes[best] && margin[i] > margin[best]) {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        x.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn accuracy(&self, x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / labels.len().max(1) as f64)
    }

    pub fn to_container(&self) -> Container {
        let meta = serde_json::json!({
            "classes": self.classes,
            "pairs": self.machines.iter().map(|m| (m.pos, m.neg, m.svm.support.len())).collect::<Vec<_>>(),
            "dim": self.scaler.dim(),
        });
        let mut c = Container::new("svm", meta);
        c.push("c", vec![1], vec![self.c]);
        c.push("gamma", vec![1], vec![self.gamma]);
        c.push("kkt_violation", vec![1], vec![self.kkt_violation]);
        c.push("scaler.mean", vec![self.scaler.dim()], self.scaler.mean.clone());
        c.push("scaler.scale", vec![self.scaler.dim()], self.scaler.scale.clone());
        for (i, m) in self.machines.iter().enumerate() {
            let sv: Vec<f64> = m.svm.support.iter().flatten().copied().collect();
            c.push(format!("pair.{i}.support"), vec![m.svm.support.len(), self.scaler.dim()], sv);
            c.push(format!("pair.{i}.coef"), vec![m.svm.coef.len()], m.svm.coef.clone());
            c.push(format!("pair.{i}.bias"), vec![1], vec![m.svm.bias]);
        }
        c
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        #[derive(Deserialize, Serialize)]
        struct Meta {
            classes: Vec<usize>,
            pairs: Vec<(usize, usize, usize)>,
            dim: usize,
        }
        let meta: Meta = serde_json::from_value(c.meta.clone()).map_err(|e| Error::Container(e.to_string()))?;
        let scalar = |c: &mut Container, name: &str| c.take(name, 1).map(|v| v[0]);
        let cost = scalar(&mut c, "c")?;
        let gamma = scalar(&mut c, "gamma")?;
        let kkt = scalar(&mut c, "kkt_violation")?;
        let scaler = Standardizer {
            mean: c.take("scaler.mean", meta.dim)?,
            scale: c.take("scaler.scale", meta.dim)?,
        };
        let mut machines = Vec::with_capacity(meta.pairs.len());
        for (i, &(pos, neg, nsv)) in meta.pairs.iter().enumerate() {
            let sv = c.take(&format!("pair.{i}.support"), nsv * meta.dim)?;
            let coef = c.take(&format!("pair.{i}.coef"), nsv)?;
            let bias = scalar(&mut c, &format!("pair.{i}.bias"))?;
            let support = if meta.dim == 0 {
                vec![Vec::new(); nsv]
            } else {
                sv.chunks(meta.dim).map(<[f64]>::to_vec).collect()
            };
            machines.push(PairMachine {
                pos,
                neg,
                svm: BinarySvm {
                    support,
                    coef,
                    bias,
                    gamma,
                    c: cost,
                },
            });
        }
        Ok(Self {
            classes: meta.classes,
            c: cost,
            gamma,
            scaler,
            machines,
            kkt_violation: kkt,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::read(path, "svm")?)
    }
}

/// Candidate penalties and kernel widths. `gamma_scaled` values are divided
/// by the input dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma_scaled: Vec<f64>,
}

impl Default for SvmGrid {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0],
            gamma_scaled: vec![1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

impl SvmGrid {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        if pos(&self.c) && pos(&self.gamma_scaled) {
            Ok(())
        } else {
            Err(Error::Config(format!("SVM grid needs positive candidates, got {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub valid_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub model: SvmModel,
    pub best: GridCell,
    pub cells: Vec<GridCell>,
}

/// Exhaustive search scored on the validation split. Ties keep the smaller
/// C, then the smaller gamma.
pub fn grid_search(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    valid_x: &[Vec<f64>],
    valid_y: &[usize],
    grid: &SvmGrid,
    cfg: &SmoConfig,
) -> Result<GridResult> {
    grid.validate()?;
    if valid_x.is_empty() || valid_x.len() != valid_y.len() {
        return Err(Error::InvalidArgument("grid search needs a non-empty validation set".into()));
    }
    let prepared = Prepared::new(train_x, train_y)?;
    let dim = train_x[0].len().max(1) as f64;
    let mut cs = grid.c.clone();
    cs.sort_by(f64::total_cmp);
    let mut gs = grid.gamma_scaled.clone();
    gs.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    let mut best: Option<(GridCell, SvmModel)> = None;
    for &c in &cs {
        for &g in &gs {
            let gamma = g / dim;
            let model = prepared.fit(c, gamma, cfg)?;
            let acc = model.accuracy(valid_x, valid_y)?;
            let cell = GridCell {
                c,
                gamma,
                valid_accuracy: acc,
            };
            cells.push(cell.clone());
            if best.as_ref().is_none_or(|b| acc > b.0.valid_accuracy) {
                best = Some((cell, model));
            }
        }
    }
    let (best, model) = best.expect("non-empty grid");
    Ok(GridResult { model, best, cells })
}
