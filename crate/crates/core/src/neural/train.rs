use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{argmax, EncoderArch, EncoderKind, EncoderModel};
use super::layers::{softmax_cross_entropy, Mode};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scaler::Standardizer;

const MOMENTUM: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            l2: 1e-4,
            dropout: 0.3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.l2 >= 0.0
            && (0.0..1.0).contains(&self.dropout);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training settings {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LabeledSet<'a> {
    pub inputs: &'a [Tensor],
    pub labels: &'a [usize],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub valid_loss: Option<f64>,
    pub valid_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

fn evaluate(model: &EncoderModel, set: LabeledSet) -> Result<(f64, f64)> {
    let logits = model.logits(set.inputs)?;
    let k = model.classes;
    let flat: Vec<f64> = logits.iter().flatten().copied().collect();
    let (loss, _, _) = softmax_cross_entropy(&Tensor::new(vec![logits.len(), k], flat)?, set.labels)?;
    let correct = logits
        .iter()
        .zip(set.labels)
        .filter(|(l, &y)| argmax(l) == y)
        .count();
    Ok((loss, correct as f64 / set.labels.len() as f64))
}

/// Jointly train an encoder and a softmax head with mini-batch SGD
/// (momentum 0.9) and L2 decay. Keeps the weights of the epoch with the best
/// validation accuracy (earliest on ties), or the best training accuracy when
/// no validation set is given.
pub fn train_encoder(
    arch: &EncoderArch,
    classes: usize,
    train: LabeledSet,
    valid: Option<LabeledSet>,
    cfg: &TrainConfig,
) -> Result<(EncoderModel, TrainHistory)> {
    cfg.validate()?;
    if classes < 2 {
        return Err(Error::InvalidArgument("training needs at least two classes".into()));
    }
    if train.inputs.is_empty() || train.inputs.len() != train.labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} training inputs with {} labels",
            train.inputs.len(),
            train.labels.len()
        )));
    }
    if let Some(&bad) = train.labels.iter().find(|&&y| y >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {classes} classes")));
    }
    let valid = valid.filter(|v| !v.inputs.is_empty());

    let mut arch = arch.clone();
    arch.set_dropout(cfg.dropout);
    let mut model = EncoderModel::new(arch, classes, cfg.seed);
    if model.arch.kind == EncoderKind::Dense {
        let rows: Vec<&[f64]> = train.inputs.iter().map(Tensor::data).collect();
        model.standardizer = Some(Standardizer::fit(&rows)?);
    }
    let refs: Vec<&Tensor> = train.inputs.iter().collect();
    let prepared = model.prepare(&refs)?;
    let samples: Vec<Tensor> = (0..prepared.batch()).map(|i| prepared.sample(i)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut velocity: Vec<Vec<f64>> = model
        .body
        .params_mut()
        .into_iter()
        .chain(model.head.params_mut())
        .map(|(w, _, _)| vec![0.0; w.len()])
        .collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, EncoderModel)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for idx in order.chunks(cfg.batch_size) {
            let batch = Tensor::stack(&idx.iter().map(|&i| &samples[i]).collect::<Vec<_>>())?;
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let (loss, probs) = model.compute_gradients(batch, &labels, cfg.l2, Mode::Train, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    learning_rate: cfg.learning_rate,
                    loss,
                });
            }
            loss_sum += loss * idx.len() as f64;
            correct += probs
                .data()
                .chunks_exact(classes)
                .zip(&labels)
                .filter(|(p, &y)| argmax(p) == y)
                .count();
            let params = model.body.params_mut().into_iter().chain(model.head.params_mut());
            for ((w, g, _), v) in params.zip(&mut velocity) {
                for ((wi, gi), vi) in w.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                    *vi = MOMENTUM * *vi - cfg.learning_rate * gi;
                    *wi += *vi;
                }
            }
        }
        model.body.clear_cache();
        model.head.clear_cache();
        let n = samples.len() as f64;
        let mut record = EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            valid_loss: None,
            valid_accuracy: None,
        };
        let score = match valid {
            Some(v) => {
                let (l, a) = evaluate(&model, v)?;
                record.valid_loss = Some(l);
                record.valid_accuracy = Some(a);
                a
            }
            None => record.train_accuracy,
        };
        log::debug!(
            "epoch {epoch}: train loss {:.4} acc {:.3}, valid acc {:?}",
            record.train_loss,
            record.train_accuracy,
            record.valid_accuracy
        );
        history.push(record);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok((
        model,
        TrainHistory {
            epochs: history,
            best_epoch,
        },
    ))
}
