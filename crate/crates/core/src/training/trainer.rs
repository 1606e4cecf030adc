use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::{pad_and_mask, Example, PaddedBatch, TrainData};
use super::eval::{argmax, evaluate};
use crate::error::{Error, Result};
use crate::model::Ptn;
use crate::nn::ops::softmax_cross_entropy;
use crate::nn::{Adam, AdamConfig, Checkpoint, Mode, Module};

fn default_batch_size() -> usize {
    16
}

fn default_max_epochs() -> usize {
    300
}

fn default_patience() -> usize {
    10
}

/// Settings for one training run. The seed has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRunConfig {
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    #[serde(default = "default_patience")]
    pub patience: usize,
    pub seed: u64,
    /// Overrides the model's L1 weight when set.
    #[serde(default)]
    pub l1_lambda: Option<f64>,
    /// Written every time validation accuracy improves.
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
}

impl TrainRunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            optimizer: AdamConfig::default(),
            batch_size: default_batch_size(),
            max_epochs: default_max_epochs(),
            patience: default_patience(),
            seed,
            l1_lambda: None,
            checkpoint_path: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.patience == 0 {
            return Err(Error::contract("patience must be at least 1"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::contract("batch size and epoch budget must be positive"));
        }
        if let Some(l) = self.l1_lambda {
            if !(l >= 0.0) {
                return Err(Error::contract("L1 weight must be non-negative"));
            }
        }
        Ok(())
    }
}

/// One line of the metric trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

impl EpochRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("epoch record serializes")
    }
}

pub fn format_trace(trace: &[EpochRecord]) -> String {
    trace.iter().map(|r| r.to_line() + "\n").collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter on a metric where larger is better. Ties do not count
/// as improvements.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, metric: f64) -> StopDecision {
        if self.best.map_or(true, |b| metric > b) {
            self.best = Some(metric);
            self.best_epoch = epoch;
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Mean cross-entropy over the batch plus the L1 term.
    pub loss: f64,
    pub correct: usize,
    pub size: usize,
}

/// Optimizer state, RNG stream and L1 weight for stepping one model.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub optimizer: Adam,
    pub batch_size: usize,
    pub l1_lambda: f64,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: &TrainRunConfig, l1_lambda: f64) -> Self {
        Self {
            optimizer: Adam::new(config.optimizer),
            batch_size: config.batch_size,
            l1_lambda,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            epoch: 0,
        }
    }

    /// One optimizer update on a mini-batch.
    pub fn step(&mut self, model: &mut Ptn, batch: &[&Example]) -> Result<StepStats> {
        let padded = pad_and_mask(batch)?;
        model.zero_grad();
        let scale = 1.0 / padded.len() as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for i in 0..padded.len() {
            let (logits, cache) = model.forward(&padded.frames[i], &padded.masks[i], Mode::Train, &mut self.rng)?;
            let (l, mut grad) = softmax_cross_entropy(&logits, padded.labels[i])?;
            if argmax(&logits) == padded.labels[i] {
                correct += 1;
            }
            loss += l * scale;
            grad.iter_mut().for_each(|g| *g *= scale);
            model.backward(&cache, &grad);
        }
        if self.l1_lambda > 0.0 {
            loss += model.l1_penalty(self.l1_lambda, true);
        }
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch: self.epoch + 1,
                loss,
            });
        }
        self.optimizer.step(model);
        Ok(StepStats {
            loss,
            correct,
            size: padded.len(),
        })
    }

    /// One shuffled pass over `examples`; returns `(mean loss, accuracy)`.
    pub fn epoch(&mut self, model: &mut Ptn, examples: &[Example]) -> Result<(f64, f64)> {
        if examples.is_empty() {
            return Err(Error::contract("no training examples"));
        }
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut self.rng);
        let mut loss = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(self.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let s = self.step(model, &batch)?;
            loss += s.loss * s.size as f64;
            correct += s.correct;
        }
        self.epoch += 1;
        let n = examples.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

/// Eval-mode mean cross-entropy of a padded batch.
pub fn batch_loss(model: &Ptn, batch: &PaddedBatch) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let logits = model.logits(&batch.frames[i], &batch.masks[i])?;
        total += softmax_cross_entropy(&logits, batch.labels[i])?.0;
    }
    Ok(total / batch.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters at the best validation accuracy; also loaded into the model.
    pub checkpoint: Checkpoint,
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
}

pub fn train(model: &mut Ptn, data: &TrainData, config: &TrainRunConfig) -> Result<TrainOutcome> {
    train_with(model, data, config, |_| {})
}

/// Trains until the epoch budget runs out or validation accuracy stops
/// improving for `patience` epochs, then restores the best parameters.
pub fn train_with(
    model: &mut Ptn,
    data: &TrainData,
    config: &TrainRunConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.check()?;
    if data.validation.is_empty() {
        return Err(Error::contract("no validation examples to monitor"));
    }
    let l1 = config.l1_lambda.unwrap_or(model.config.l1_lambda);
    let mut trainer = Trainer::new(config, l1);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut trace = Vec::new();
    let mut best = model.to_checkpoint(checkpoint_metadata(model, 0, f64::NAN));
    for epoch in 1..=config.max_epochs {
        let (train_loss, train_accuracy) = trainer.epoch(model, &data.train)?;
        let validation_accuracy = evaluate(model, &data.validation)?.accuracy;
        let record = EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            validation_accuracy,
        };
        on_epoch(&record);
        trace.push(record);
        match stopper.observe(epoch, validation_accuracy) {
            StopDecision::Improved => {
                best = model.to_checkpoint(checkpoint_metadata(model, epoch, validation_accuracy));
                if let Some(path) = &config.checkpoint_path {
                    best.save(path)?;
                }
            }
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    model.load_checkpoint(&best)?;
    Ok(TrainOutcome {
        checkpoint: best,
        trace,
        best_epoch: stopper.best_epoch(),
        best_validation_accuracy: stopper.best().unwrap_or(0.0),
    })
}

fn checkpoint_metadata(model: &Ptn, epoch: usize, accuracy: f64) -> String {
    serde_json::json!({
        "model": model.config,
        "epoch": epoch,
        "validation_accuracy": if accuracy.is_finite() { Some(accuracy) } else { None },
    })
    .to_string()
}
