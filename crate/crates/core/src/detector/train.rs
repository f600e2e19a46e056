use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::mean_bce;
use super::metrics::MetricsReport;
use super::model::{DetectorModel, Mode};
use super::real::Real;
use crate::error::{Error, Result};
use crate::raster::{FeatureGrid, NormState};
use crate::rng;

/// Labeled, normalized grids addressable by index.
pub trait ExampleSource {
    fn len(&self) -> usize;

    fn label(&self, index: usize) -> u8;

    fn grid(&self, index: usize) -> Result<FeatureGrid>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ExampleSource for [(FeatureGrid, u8)] {
    fn len(&self) -> usize {
        <[_]>::len(self)
    }

    fn label(&self, index: usize) -> u8 {
        self[index].1
    }

    fn grid(&self, index: usize) -> Result<FeatureGrid> {
        Ok(self[index].0.clone())
    }
}

impl ExampleSource for Vec<(FeatureGrid, u8)> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn label(&self, index: usize) -> u8 {
        self[index].1
    }

    fn grid(&self, index: usize) -> Result<FeatureGrid> {
        Ok(self[index].0.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub dropout_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 0.003,
            momentum: 0.9,
            batch_size: 8,
            shuffle_seed: 1,
            dropout_seed: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate {} is not a finite non-negative value", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// One-based.
    pub epoch: usize,
    /// Mean training-mode loss over every example in the epoch.
    pub mean_loss: f64,
    pub min_batch_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.mean_loss)
    }

    pub fn min_batch_loss(&self) -> f64 {
        self.epochs.iter().map(|e| e.min_batch_loss).fold(f64::INFINITY, f64::min)
    }
}

/// Mini-batch SGD with classical momentum (`v = mu v + g; w -= lr v`).
/// Shuffling and dropout masks are drawn from streams derived from the
/// configured seeds, so a run is reproducible bit for bit.
pub fn train<T: Real, S: ExampleSource + ?Sized>(
    model: &mut DetectorModel<T>,
    data: &S,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainHistory> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let n = data.len();
    let lr = T::lit(cfg.learning_rate);
    let mu = T::lit(cfg.momentum);
    let mut velocity = vec![T::zero(); model.params().len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let n_batches = n.div_ceil(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::seeded(rng::derive(cfg.shuffle_seed, epoch as u64)));
        let mut loss_sum = 0.0;
        let mut min_batch = f64::INFINITY;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let grids = idx.iter().map(|&i| data.grid(i)).collect::<Result<Vec<_>>>()?;
            let labels: Vec<u8> = idx.iter().map(|&i| data.label(i)).collect();
            check_inputs(&grids)?;
            let inputs: Vec<&[f32]> = grids.iter().map(|g| g.values.as_slice()).collect();
            let step = ((epoch - 1) * n_batches + batch) as u64;
            let cache = model.forward_values(&inputs, Mode::Train, rng::derive(cfg.dropout_seed, step))?;
            let loss = mean_bce(&cache.probabilities(), &labels);
            let logits_ok = cache.logits().iter().all(|z| z.is_finite());
            if !loss.is_finite() || !logits_ok {
                return Err(Error::Training { epoch, batch, loss });
            }
            loss_sum += loss * idx.len() as f64;
            min_batch = min_batch.min(loss);
            let grads = model.backward(&cache, &labels)?;
            let params = model.params_mut();
            for ((p, v), &g) in params.iter_mut().zip(&mut velocity).zip(&grads.values) {
                *v = mu * *v + g;
                *p -= lr * *v;
            }
            if !params.iter().all(|p| p.is_finite()) {
                return Err(Error::Training { epoch, batch, loss: f64::NAN });
            }
        }
        let stats = EpochStats { epoch, mean_loss: loss_sum / n as f64, min_batch_loss: min_batch };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok(TrainHistory { epochs: history })
}

fn check_inputs(grids: &[FeatureGrid]) -> Result<()> {
    if grids.iter().any(|g| g.norm_state != NormState::Normalized) {
        return Err(Error::Input("detector input must be normalized".into()));
    }
    Ok(())
}

/// Eval-mode probabilities for every example, in index order.
pub fn predict_all<T: Real, S: ExampleSource + ?Sized>(
    model: &DetectorModel<T>,
    data: &S,
    batch_size: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.len());
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let grids = chunk.iter().map(|&i| data.grid(i)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&FeatureGrid> = grids.iter().collect();
        out.extend(model.predict_batch(&refs)?);
    }
    Ok(out)
}

pub fn evaluate<T: Real, S: ExampleSource + ?Sized>(
    model: &DetectorModel<T>,
    data: &S,
    threshold: f64,
) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::Input("evaluation split is empty".into()));
    }
    let probs = predict_all(model, data, 16)?;
    let labels: Vec<u8> = (0..data.len()).map(|i| data.label(i)).collect();
    MetricsReport::from_predictions(&probs, &labels, threshold)
}
