//! Mini-batch training, evaluation and hop-count selection.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::{Amrnn, LossKind, Mode};
use crate::optim::{RmsPropConfig, RmsPropState};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub rms_decay: f64,
    pub epsilon: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub hop_search: Vec<usize>,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            momentum: 0.9,
            rms_decay: 0.9,
            epsilon: 1e-8,
            dropout_rate: 0.2,
            batch_size: 40,
            max_epochs: 50,
            hop_search: vec![1, 2, 3],
            seed: 0,
            loss: LossKind::SquaredError,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        unit("momentum", self.momentum)?;
        unit("rms_decay", self.rms_decay)?;
        unit("dropout_rate", self.dropout_rate)?;
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("learning_rate and epsilon must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.hop_search.is_empty() || self.hop_search.contains(&0) {
            return Err(Error::Config("hop_search must list hop counts of at least 1".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmsPropConfig {
        RmsPropConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            decay: self.rms_decay,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_train_loss: f64,
    /// `None` when there is no dev split.
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Amrnn,
    pub history: Vec<EpochRecord>,
}

/// Stateless 64-bit mixer used to derive independent sub-seeds.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Sums per-example gradients in order and divides by the count.
pub(crate) fn mean_gradients(per_example: Vec<Vec<Tensor>>) -> Vec<Tensor> {
    let n = per_example.len() as f64;
    let mut iter = per_example.into_iter();
    let mut acc = iter.next().expect("non-empty batch");
    for grads in iter {
        for (a, g) in acc.iter_mut().zip(grads) {
            for (x, y) in a.data_mut().iter_mut().zip(g.data()) {
                *x += y;
            }
        }
    }
    for a in &mut acc {
        for x in a.data_mut() {
            *x /= n;
        }
    }
    acc
}

pub fn train(model: Amrnn, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(model, dataset, cfg, |_| {})
}

/// Like [`train`], calling `on_epoch` after each epoch is recorded.
pub fn train_with_progress(
    mut model: Amrnn,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let mut history = Vec::new();
    if cfg.max_epochs == 0 {
        return Ok(TrainOutcome { model, history });
    }

    let opt = cfg.optimizer();
    let mut state = RmsPropState::new(model.encoder.tensors().into_iter().map(|(_, t)| t));
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut best: Option<(f64, Amrnn)> = None;

    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, epoch as u64]));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(f64, Vec<Tensor>)> = batch
                .par_iter()
                .enumerate()
                .map(|(k, &idx)| {
                    let mode = Mode::Train {
                        dropout_seed: mix_seed(&[cfg.seed, epoch as u64, b as u64, k as u64]),
                    };
                    model.loss_and_gradients(&dataset.train[idx], cfg.loss, mode, cfg.dropout_rate)
                })
                .collect::<Result<_>>()?;
            let mut grads = Vec::with_capacity(results.len());
            for (l, g) in results {
                loss_sum += l;
                grads.push(g);
            }
            let mean = mean_gradients(grads);
            state.update(&mut model.encoder.tensors_mut(), &mean, &opt)?;
        }

        let dev_accuracy = if dataset.dev.is_empty() {
            None
        } else {
            Some(evaluate(&model, &dataset.dev)?)
        };
        let record = EpochRecord {
            epoch,
            mean_train_loss: loss_sum / dataset.train.len() as f64,
            dev_accuracy,
        };
        on_epoch(&record);
        history.push(record);
        if let Some(acc) = dev_accuracy {
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok(TrainOutcome { model, history })
}

/// Per-example predicted choice indices, in input order.
pub fn predictions(model: &Amrnn, examples: &[Example]) -> Result<Vec<usize>> {
    examples.par_iter().map(|e| model.predict(e).map(|p| p.chosen)).collect()
}

/// Fraction of examples whose predicted choice is the answer.
pub fn evaluate(model: &Amrnn, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Precondition("cannot evaluate on an empty example list".into()));
    }
    let chosen = predictions(model, examples)?;
    Ok(accuracy(&chosen, examples))
}

pub fn accuracy(chosen: &[usize], examples: &[Example]) -> f64 {
    let correct = chosen.iter().zip(examples).filter(|(c, e)| **c == e.answer).count();
    correct as f64 / examples.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopSearch {
    pub best: usize,
    /// `(n_hops, best dev accuracy)` in search order.
    pub dev_accuracy: Vec<(usize, f64)>,
}

/// Trains one model per hop count and keeps the count with the best dev accuracy
/// (smallest count on ties).
pub fn tune_hops(model_factory: impl Fn(usize) -> Amrnn, dataset: &Dataset, cfg: &TrainConfig) -> Result<HopSearch> {
    cfg.validate()?;
    if dataset.dev.is_empty() {
        return Err(Error::Precondition("hop tuning needs a non-empty dev split".into()));
    }
    let mut candidates = cfg.hop_search.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let mut dev_accuracy = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for n in candidates {
        let outcome = train(model_factory(n), dataset, cfg)?;
        let acc = evaluate(&outcome.model, &dataset.dev)?;
        dev_accuracy.push((n, acc));
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((n, acc));
        }
    }
    Ok(HopSearch {
        best: best.expect("at least one candidate").0,
        dev_accuracy,
    })
}

pub fn write_history(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in history {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
