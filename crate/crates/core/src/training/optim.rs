use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::network::Model;
use crate::training::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(Error::InvalidArgument(format!(
                "unknown optimizer `{s}` (expected adam or sgd)"
            ))),
        }
    }
}

fn check_gradient(model: &Model, g: &Array2<f64>) -> Result<()> {
    let n = model.neurons();
    if g.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "gradient matrix",
            expected: n * n,
            actual: g.len(),
        });
    }
    Ok(())
}

/// Writes new weights only if every one of them is finite.
fn commit(model: &mut Model, new_weights: Vec<f64>) -> Result<()> {
    if new_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weight update"));
    }
    let mut it = new_weights.into_iter();
    model.update_allowed(|_, _, _| it.next().expect("one value per allowed weight"));
    Ok(())
}

/// `A <- A - lr * G` over allowed connections.
pub fn sgd_step(model: &mut Model, g: &Array2<f64>, lr: f64) -> Result<()> {
    check_gradient(model, g)?;
    let updated = model
        .mask()
        .edges()
        .map(|(i, j)| model.weights()[[i, j]] - lr * g[[i, j]])
        .collect();
    commit(model, updated)
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Array2<f64>,
    pub v: Array2<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(neurons: usize) -> Self {
        AdamState {
            m: Array2::zeros((neurons, neurons)),
            v: Array2::zeros((neurons, neurons)),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Masked entries are left untouched.
pub fn adam_step(state: &mut AdamState, model: &mut Model, g: &Array2<f64>, cfg: &TrainConfig) -> Result<()> {
    check_gradient(model, g)?;
    if state.m.dim() != g.dim() || state.v.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            context: "Adam moments",
            expected: g.len(),
            actual: state.m.len(),
        });
    }
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let step = state.step + 1;
    let c1 = 1.0 - b1.powf(step as f64);
    let c2 = 1.0 - b2.powf(step as f64);

    let mut m = state.m.clone();
    let mut v = state.v.clone();
    let mut updated = Vec::with_capacity(model.mask().edge_count());
    for (i, j) in model.mask().edges() {
        let grad = g[[i, j]];
        let mi = b1 * m[[i, j]] + (1.0 - b1) * grad;
        let vi = b2 * v[[i, j]] + (1.0 - b2) * grad * grad;
        m[[i, j]] = mi;
        v[[i, j]] = vi;
        let m_hat = mi / c1;
        let v_hat = vi / c2;
        updated.push(model.weights()[[i, j]] - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon));
    }
    commit(model, updated)?;
    state.m = m;
    state.v = v;
    state.step = step;
    Ok(())
}
