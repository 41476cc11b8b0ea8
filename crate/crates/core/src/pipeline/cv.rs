//! Cross-validation: per fold, train the seven encoders, fuse their
//! embeddings, grid-search the SVM on validation and score the test split.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::LeafFeatureSet;
use super::folds::{FoldMode, FoldPlan, FoldSplit, FOLDS};
use super::fusion::{fuse, Branch, BRANCHES};
use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::neural::{train_encoder, EncoderModel, LabeledSet, Tensor, TrainConfig, TrainHistory};
use crate::svm::{grid_search, squared_distance, GridCell, SmoConfig, SvmGrid, SvmModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfigs {
    pub color: TrainConfig,
    pub vein: TrainConfig,
    pub xy_projection: TrainConfig,
    pub shape: TrainConfig,
    pub texture: TrainConfig,
    pub color_stats: TrainConfig,
    pub fourier: TrainConfig,
}

impl Default for EncoderConfigs {
    fn default() -> Self {
        let image = TrainConfig::default();
        let vector = TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        };
        Self {
            color: image.clone(),
            vein: image.clone(),
            xy_projection: vector.clone(),
            shape: vector.clone(),
            texture: vector.clone(),
            color_stats: vector.clone(),
            fourier: vector,
        }
    }
}

impl EncoderConfigs {
    pub fn get(&self, b: Branch) -> &TrainConfig {
        match b {
            Branch::Color => &self.color,
            Branch::Vein => &self.vein,
            Branch::XyProjection => &self.xy_projection,
            Branch::Shape => &self.shape,
            Branch::Texture => &self.texture,
            Branch::ColorStats => &self.color_stats,
            Branch::Fourier => &self.fourier,
        }
    }

    pub fn get_mut(&mut self, b: Branch) -> &mut TrainConfig {
        match b {
            Branch::Color => &mut self.color,
            Branch::Vein => &mut self.vein,
            Branch::XyProjection => &mut self.xy_projection,
            Branch::Shape => &mut self.shape,
            Branch::Texture => &mut self.texture,
            Branch::ColorStats => &mut self.color_stats,
            Branch::Fourier => &mut self.fourier,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub encoders: EncoderConfigs,
    pub svm_grid: SvmGrid,
    pub smo: SmoConfig,
    pub seed: u64,
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        for b in BRANCHES {
            self.encoders.get(b).validate().map_err(|e| e.in_branch(b.name()))?;
        }
        self.svm_grid.validate()?;
        if !(self.smo.tol > 0.0) || self.smo.max_iter == 0 {
            return Err(Error::Config(format!("invalid SMO settings {:?}", self.smo)));
        }
        Ok(())
    }
}

/// First 16 hex digits of the SHA-256 of the value's JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Training seed of one branch encoder in one fold (0-based).
pub fn encoder_seed(cv_seed: u64, fold: usize, branch: Branch, offset: u64) -> u64 {
    splitmix(cv_seed ^ ((fold as u64) << 32) ^ branch.position() as u64).wrapping_add(offset)
}

/// Encoder inputs for every entry, one list per branch.
pub struct BranchInputs {
    pub inputs: Vec<Vec<Tensor>>,
}

impl BranchInputs {
    pub fn new(features: &[LeafFeatureSet]) -> Self {
        Self {
            inputs: BRANCHES
                .iter()
                .map(|&b| features.iter().map(|f| b.input(f)).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, b: Branch, idx: &[usize]) -> Vec<Tensor> {
        idx.iter().map(|&i| self.inputs[b.position()][i].clone()).collect()
    }
}

fn gather<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Everything trained in one fold.
pub struct FoldModels {
    pub encoders: Vec<EncoderModel>,
    pub histories: Vec<TrainHistory>,
    pub svm: SvmModel,
    pub best: GridCell,
    pub grid: Vec<GridCell>,
    /// Fused embedding of every entry.
    pub fused: Vec<Vec<f64>>,
}

/// Train the encoders on `split.train` (validated on `split.valid`), fuse
/// every entry and grid-search the SVM.
pub fn train_fold(
    data: &BranchInputs,
    labels: &[usize],
    classes: usize,
    split: &FoldSplit,
    cfg: &CvConfig,
    fold: usize,
) -> Result<FoldModels> {
    let train_y = gather(labels, &split.train);
    let valid_y = gather(labels, &split.valid);
    let mut encoders = Vec::new();
    let mut histories = Vec::new();
    for b in BRANCHES {
        let t = Instant::now();
        let tx = data.gather(b, &split.train);
        let vx = data.gather(b, &split.valid);
        let mut tc = cfg.encoders.get(b).clone();
        tc.seed = encoder_seed(cfg.seed, fold, b, tc.seed);
        let arch = b.arch(&tx[0]).map_err(|e| e.in_branch(b.name()))?;
        let (model, history) = train_encoder(
            &arch,
            classes,
            LabeledSet {
                inputs: &tx,
                labels: &train_y,
            },
            Some(LabeledSet {
                inputs: &vx,
                labels: &valid_y,
            }),
            &tc,
        )
        .map_err(|e| e.in_branch(b.name()))?;
        log::info!(
            "fold {} {}: best epoch {} in {:.1}s",
            fold + 1,
            b.name(),
            history.best_epoch,
            t.elapsed().as_secs_f64()
        );
        encoders.push(model);
        histories.push(history);
    }
    let per_branch: Vec<Vec<Vec<f64>>> = BRANCHES
        .iter()
        .zip(&encoders)
        .map(|(&b, m)| m.encode(&data.inputs[b.position()]).map_err(|e| e.in_branch(b.name())))
        .collect::<Result<_>>()?;
    let fused: Vec<Vec<f64>> = (0..data.len())
        .map(|i| fuse(&per_branch.iter().map(|e| e[i].clone()).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let g = grid_search(
        &gather(&fused, &split.train),
        &train_y,
        &gather(&fused, &split.valid),
        &valid_y,
        &cfg.svm_grid,
        &cfg.smo,
    )?;
    Ok(FoldModels {
        encoders,
        histories,
        svm: g.model,
        best: g.best,
        grid: g.cells,
        fused,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub valid_accuracy: f64,
    pub test_accuracy: f64,
    pub c: f64,
    pub gamma: f64,
    pub kkt_violation: f64,
    /// Softmax-head test accuracy per branch, in branch order.
    pub branch_accuracy: Vec<f64>,
    /// `confusion[true][predicted]` on the test split.
    pub confusion: Vec<Vec<usize>>,
    /// Smallest distance between class centroids over the largest RMS
    /// within-class spread, in the standardized fused space of the train split.
    pub separation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// 1-based fold number.
    pub fold: usize,
    pub metrics: Option<FoldMetrics>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mode: FoldMode,
    pub seed: u64,
    pub config_hash: String,
    pub classes: Vec<String>,
    /// True when only a subset of the ten folds ran.
    pub partial: bool,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    pub fn completed(&self) -> impl Iterator<Item = &FoldMetrics> {
        self.folds.iter().filter_map(|f| f.metrics.as_ref())
    }

    pub fn failed(&self) -> usize {
        self.folds.iter().filter(|f| f.metrics.is_none()).count()
    }

    pub fn test(&self) -> Option<Summary> {
        Summary::of(&self.completed().map(|m| m.test_accuracy).collect::<Vec<_>>())
    }

    pub fn valid(&self) -> Option<Summary> {
        Summary::of(&self.completed().map(|m| m.valid_accuracy).collect::<Vec<_>>())
    }

    pub fn branch(&self, b: Branch) -> Option<Summary> {
        Summary::of(&self.completed().map(|m| m.branch_accuracy[b.position()]).collect::<Vec<_>>())
    }

    pub fn max_kkt_violation(&self) -> f64 {
        self.completed().map(|m| m.kkt_violation).fold(0.0, f64::max)
    }

    pub fn confusion(&self) -> Vec<Vec<usize>> {
        let k = self.classes.len();
        let mut total = vec![vec![0; k]; k];
        for m in self.completed() {
            for (row, src) in total.iter_mut().zip(&m.confusion) {
                for (t, s) in row.iter_mut().zip(src) {
                    *t += s;
                }
            }
        }
        total
    }
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

fn separation(rows: &[Vec<f64>], labels: &[usize], classes: usize) -> f64 {
    let dim = rows[0].len();
    let mut centroids = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for (r, &y) in rows.iter().zip(labels) {
        counts[y] += 1;
        for (c, v) in centroids[y].iter_mut().zip(r) {
            *c += v;
        }
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    }
    let mut spread = vec![0.0; classes];
    for (r, &y) in rows.iter().zip(labels) {
        spread[y] += squared_distance(r, &centroids[y]);
    }
    let max_spread = (0..classes)
        .filter(|&c| counts[c] > 0)
        .map(|c| (spread[c] / counts[c] as f64).sqrt())
        .fold(0.0, f64::max);
    let mut min_dist = f64::INFINITY;
    for a in 0..classes {
        for b in 0..a {
            if counts[a] > 0 && counts[b] > 0 {
                min_dist = min_dist.min(squared_distance(&centroids[a], &centroids[b]).sqrt());
            }
        }
    }
    min_dist / max_spread
}

fn run_fold(
    data: &BranchInputs,
    labels: &[usize],
    classes: usize,
    split: &FoldSplit,
    cfg: &CvConfig,
    fold: usize,
) -> Result<FoldMetrics> {
    let m = train_fold(data, labels, classes, split, cfg, fold)?;
    let test_y = gather(labels, &split.test);
    let mut branch_accuracy = Vec::new();
    for (b, enc) in BRANCHES.iter().zip(&m.encoders) {
        let pred = enc.predict(&data.gather(*b, &split.test))?;
        branch_accuracy.push(accuracy(&pred, &test_y));
    }
    let test_x = gather(&m.fused, &split.test);
    let pred = m.svm.predict(&test_x)?;
    let mut confusion = vec![vec![0; classes]; classes];
    for (&p, &t) in pred.iter().zip(&test_y) {
        confusion[t][p] += 1;
    }
    let train_std: Vec<Vec<f64>> = split
        .train
        .iter()
        .map(|&i| m.svm.scaler.transform(&m.fused[i]))
        .collect::<Result<_>>()?;
    Ok(FoldMetrics {
        valid_accuracy: m.best.valid_accuracy,
        test_accuracy: accuracy(&pred, &test_y),
        c: m.best.c,
        gamma: m.best.gamma,
        kkt_violation: m.svm.kkt_violation,
        branch_accuracy,
        confusion,
        separation: separation(&train_std, &gather(labels, &split.train), classes),
    })
}

/// Run the listed 1-based folds (all ten when `folds` is empty). The plan is
/// audited before any training; a failing fold is recorded and the others
/// still run. Folds run in parallel when `parallel` is set; results do not
/// depend on it.
pub fn run_cv(
    manifest: &DatasetManifest,
    features: &[LeafFeatureSet],
    plan: &FoldPlan,
    folds: &[usize],
    cfg: &CvConfig,
    parallel: bool,
) -> Result<CvReport> {
    cfg.validate()?;
    if features.len() != manifest.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature rows for {} manifest entries",
            features.len(),
            manifest.len()
        )));
    }
    plan.audit(manifest)?;
    let mut selected: Vec<usize> = if folds.is_empty() { (1..=FOLDS).collect() } else { folds.to_vec() };
    selected.sort_unstable();
    selected.dedup();
    if let Some(&bad) = selected.iter().find(|&&f| f == 0 || f > FOLDS) {
        return Err(Error::Config(format!("fold {bad} is outside 1..={FOLDS}")));
    }
    let data = BranchInputs::new(features);
    let labels = manifest.labels();
    let classes = manifest.classes.len();
    let one = |&f: &usize| {
        let t = Instant::now();
        let r = run_fold(&data, &labels, classes, &plan.splits[f - 1], cfg, f - 1);
        match &r {
            Ok(m) => log::info!(
                "fold {f}: test {:.4} valid {:.4} ({:.0}s)",
                m.test_accuracy,
                m.valid_accuracy,
                t.elapsed().as_secs_f64()
            ),
            Err(e) => log::error!("fold {f} failed: {e}"),
        }
        FoldResult {
            fold: f,
            error: r.as_ref().err().map(|e| e.to_string()),
            metrics: r.ok(),
        }
    };
    let results: Vec<FoldResult> = if parallel {
        selected.par_iter().map(one).collect()
    } else {
        selected.iter().map(one).collect()
    };
    Ok(CvReport {
        mode: plan.mode,
        seed: plan.seed,
        config_hash: config_hash(&(cfg, plan.mode, plan.seed)),
        classes: manifest.classes.clone(),
        partial: selected.len() < FOLDS,
        folds: results,
    })
}
