//! Loss, optimizers and the full-batch training loop.

mod loss;
mod optim;

use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::fop::FopWorkspace;
use crate::network::{argmax, predict_outputs, Model};
use crate::{Error, Result};

pub use loss::{softmax, softmax_cross_entropy};
pub use optim::{adam_step, sgd_step, AdamState, OptimizerKind};

/// Training hyperparameters.
///
/// Field names double as the keys of the JSON config file accepted by the
/// command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seed for weight initialization and data splitting. Training itself is
    /// full-batch and draws no random numbers.
    pub seed: u64,
    /// Reset input neurons to `(x, 1)` after every tick.
    pub clamp_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            learning_rate: 0.001,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            clamp_inputs: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(beta > 0.0 && beta < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {beta}"));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Per-epoch training loss and accuracy.
///
/// `epochs[k]` describes the weights after `k + 1` optimizer steps;
/// `initial` describes the weights before training.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub initial: Option<EpochMetrics>,
    pub epochs: Vec<EpochMetrics>,
}

impl Metrics {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|m| m.loss).collect()
    }

    /// `epoch,loss,accuracy` with the initial row as epoch 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy\n");
        for m in self.initial.iter().chain(&self.epochs) {
            let _ = writeln!(out, "{},{:.16e},{:.16e}", m.epoch, m.loss, m.accuracy);
        }
        out
    }
}

/// Loss, accuracy and mean gradient over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub loss: f64,
    pub accuracy: f64,
    pub gradient: Array2<f64>,
}

fn check_data(model: &Model, data: &LabeledDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.feature_count() != model.shape().features() {
        return Err(Error::DimensionMismatch {
            context: "dataset features",
            expected: model.shape().features(),
            actual: data.feature_count(),
        });
    }
    if data.class_count() > model.shape().outputs {
        return Err(Error::LabelOutOfRange {
            label: data.class_count() - 1,
            classes: model.shape().outputs,
        });
    }
    Ok(())
}

struct SampleResult {
    loss: f64,
    correct: bool,
    edge_gradient: Vec<f64>,
}

/// Loss, accuracy and mean error gradient over `data`.
///
/// Samples may be processed in parallel; the reduction runs in dataset order
/// so the result does not depend on the worker count.
pub fn batch_pass(model: &Model, data: &LabeledDataset) -> Result<BatchResult> {
    check_data(model, data)?;
    let shape = *model.shape();
    let probe = FopWorkspace::new(model);
    let edges: Vec<(usize, usize)> = probe.edges().collect();
    let per_sample: Vec<SampleResult> = (0..data.len())
        .into_par_iter()
        .map_init(
            || probe.clone(),
            |ws, s| {
                let (x, label) = data.sample(s);
                ws.run(model, x)?;
                let y = ws.outputs(&shape);
                let correct = argmax(y) == label;
                let (loss, d_e_d_y) = softmax_cross_entropy(y, label)?;
                let mut edge_gradient = vec![0.0; ws.edge_count()];
                ws.edge_gradient(&shape, &d_e_d_y, &mut edge_gradient);
                Ok(SampleResult {
                    loss,
                    correct,
                    edge_gradient,
                })
            },
        )
        .collect::<Result<_>>()?;

    let count = data.len() as f64;
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut sum = vec![0.0; edges.len()];
    for r in &per_sample {
        loss += r.loss;
        correct += usize::from(r.correct);
        for (acc, g) in sum.iter_mut().zip(&r.edge_gradient) {
            *acc += g;
        }
    }
    let n = model.neurons();
    let mut gradient = Array2::zeros((n, n));
    for (&(i, j), g) in edges.iter().zip(sum) {
        gradient[[i, j]] = g / count;
    }
    let loss = loss / count;
    if !loss.is_finite() {
        return Err(Error::NonFinite("batch loss"));
    }
    Ok(BatchResult {
        loss,
        accuracy: correct as f64 / count,
        gradient,
    })
}

/// Mean softmax cross-entropy loss and mean error gradient over `data`.
pub fn batch_gradient(model: &Model, data: &LabeledDataset) -> Result<(f64, Array2<f64>)> {
    let r = batch_pass(model, data)?;
    Ok((r.loss, r.gradient))
}

/// Mean loss and accuracy without gradients.
pub fn batch_loss(model: &Model, data: &LabeledDataset) -> Result<(f64, f64)> {
    check_data(model, data)?;
    let results: Vec<(f64, bool)> = (0..data.len())
        .into_par_iter()
        .map(|s| {
            let (x, label) = data.sample(s);
            let y = predict_outputs(model, x)?;
            let (loss, _) = softmax_cross_entropy(&y, label)?;
            Ok((loss, argmax(&y) == label))
        })
        .collect::<Result<_>>()?;
    let count = data.len() as f64;
    let loss = results.iter().map(|r| r.0).sum::<f64>() / count;
    let correct = results.iter().filter(|r| r.1).count();
    Ok((loss, correct as f64 / count))
}

/// Fraction of samples whose highest output matches the label (ties go to
/// the lowest index).
pub fn evaluate(model: &Model, data: &LabeledDataset) -> Result<f64> {
    check_data(model, data)?;
    let mut correct = 0usize;
    for s in 0..data.len() {
        let (x, label) = data.sample(s);
        if argmax(&predict_outputs(model, x)?) == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Full-batch training for `cfg.epochs` optimizer steps.
///
/// The model's clamping flag is set from `cfg`. Training stops with
/// [`Error::Diverged`] as soon as the loss becomes non-finite.
pub fn train(mut model: Model, data: &LabeledDataset, cfg: &TrainConfig) -> Result<(Model, Metrics)> {
    cfg.validate()?;
    check_data(&model, data)?;
    model.set_clamp_inputs(cfg.clamp_inputs);
    let mut metrics = Metrics::default();
    if cfg.epochs == 0 {
        return Ok((model, metrics));
    }

    let mut adam = AdamState::new(model.neurons());
    for epoch in 1..=cfg.epochs {
        let pass = batch_pass(&model, data).map_err(|e| diverged(e, epoch - 1))?;
        let row = EpochMetrics {
            epoch: epoch - 1,
            loss: pass.loss,
            accuracy: pass.accuracy,
        };
        if epoch == 1 {
            metrics.initial = Some(row);
        } else {
            metrics.epochs.push(row);
        }
        match cfg.optimizer {
            OptimizerKind::Adam => adam_step(&mut adam, &mut model, &pass.gradient, cfg)?,
            OptimizerKind::Sgd => sgd_step(&mut model, &pass.gradient, cfg.learning_rate)?,
        }
    }
    let (loss, accuracy) = batch_loss(&model, data).map_err(|e| diverged(e, cfg.epochs))?;
    if !loss.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            loss,
        });
    }
    metrics.epochs.push(EpochMetrics {
        epoch: cfg.epochs,
        loss,
        accuracy,
    });
    Ok((model, metrics))
}

fn diverged(err: Error, epoch: usize) -> Error {
    match err {
        Error::NonFinite(_) | Error::NumericOverflow { .. } => Error::Diverged {
            epoch,
            loss: f64::NAN,
        },
        other => other,
    }
}
