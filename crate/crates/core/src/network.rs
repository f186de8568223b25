//! Network data model and forward state propagation.
//!
//! A mesh network with `N` neurons is a single `N x N` weight matrix `A`,
//! where `A[i, j]` is the weight from neuron `i` to neuron `j`. Neurons are
//! ordered inputs first, hidden next, outputs last. The last input neuron is
//! the bias and always reads `1`.
//!
//! The state is a row vector `S_n` of length `N`. One tick computes
//!
//! ```text
//! T_n = S_{n-1} A
//! S_n = phi(T_n)        (element-wise, per-neuron activation)
//! ```
//!
//! `S_0` holds the features and the bias on the input neurons and zero
//! elsewhere. With input clamping on (the default) the input neurons are
//! reset to `(x, 1)` after every tick.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::topology::Mask;
use crate::{Error, Result};

/// Neuron counts and tick count.
///
/// `inputs` counts the bias neuron. `ticks` counts states including `S_0`,
/// so a network with `ticks = 3` performs two propagation steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub ticks: usize,
}

impl NetworkShape {
    pub fn new(inputs: usize, hidden: usize, outputs: usize, ticks: usize) -> Result<Self> {
        let shape = NetworkShape {
            inputs,
            hidden,
            outputs,
            ticks,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs < 2 {
            return Err(Error::InvalidShape(format!(
                "need at least one feature plus the bias neuron, got {} input neurons",
                self.inputs
            )));
        }
        if self.outputs < 1 {
            return Err(Error::InvalidShape("need at least one output neuron".into()));
        }
        if self.ticks < 1 {
            return Err(Error::InvalidShape("ticks must be at least 1".into()));
        }
        Ok(())
    }

    /// Total neuron count `N = I + H + O`.
    #[inline]
    pub fn neurons(&self) -> usize {
        self.inputs + self.hidden + self.outputs
    }

    /// Number of caller-supplied features (`I - 1`).
    #[inline]
    pub fn features(&self) -> usize {
        self.inputs - 1
    }

    #[inline]
    pub fn bias_index(&self) -> usize {
        self.inputs - 1
    }

    pub fn hidden_range(&self) -> Range<usize> {
        self.inputs..self.inputs + self.hidden
    }

    pub fn output_range(&self) -> Range<usize> {
        let n = self.neurons();
        n - self.outputs..n
    }
}

/// Element-wise activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    /// Value and derivative at `x`. `relu'(0)` is taken as 0.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let y = x.tanh();
                (y, 1.0 - y * y)
            }
            Activation::Sigmoid => {
                let y = 1.0 / (1.0 + (-x).exp());
                (y, y * (1.0 - y))
            }
            Activation::Identity => (x, 1.0),
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(Error::UnknownActivation(s.to_string())),
        }
    }
}

/// Applies `activation` to every entry of `x`, returning values and
/// derivatives computed in one pass.
pub fn activation_eval(activation: Activation, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter().map(|&v| activation.eval(v)).unzip()
}

/// Weight initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitSpec {
    Zero,
    /// Uniform on `(-sqrt(6/N), sqrt(6/N))` at allowed positions.
    #[default]
    UniformScaled,
}

/// A mesh network: weights, connection mask and per-neuron activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    shape: NetworkShape,
    weights: Array2<f64>,
    mask: Mask,
    activations: Vec<Activation>,
    clamp_inputs: bool,
}

impl Model {
    /// Assembles a model from parts, checking every invariant.
    pub fn new(
        shape: NetworkShape,
        mask: Mask,
        weights: Array2<f64>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        shape.validate()?;
        mask.validate(&shape)?;
        let n = shape.neurons();
        if weights.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "weight matrix",
                expected: n * n,
                actual: weights.len(),
            });
        }
        if activations.len() != n {
            return Err(Error::DimensionMismatch {
                context: "activation list",
                expected: n,
                actual: activations.len(),
            });
        }
        for ((i, j), &w) in weights.indexed_iter() {
            if !w.is_finite() {
                return Err(Error::NonFinite("weight matrix"));
            }
            if w != 0.0 && !mask.get(i, j) {
                return Err(Error::MaskedWeight {
                    row: i,
                    col: j,
                    value: w,
                });
            }
        }
        Ok(Model {
            shape,
            weights,
            mask,
            activations,
            clamp_inputs: true,
        })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn neurons(&self) -> usize {
        self.shape.neurons()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    /// The activation shared by every neuron, if there is one.
    pub fn uniform_activation(&self) -> Option<Activation> {
        let first = *self.activations.first()?;
        self.activations
            .iter()
            .all(|&a| a == first)
            .then_some(first)
    }

    pub fn clamp_inputs(&self) -> bool {
        self.clamp_inputs
    }

    pub fn set_clamp_inputs(&mut self, clamp: bool) {
        self.clamp_inputs = clamp;
    }

    pub fn with_clamp_inputs(mut self, clamp: bool) -> Self {
        self.clamp_inputs = clamp;
        self
    }

    pub fn set_ticks(&mut self, ticks: usize) -> Result<()> {
        let shape = NetworkShape { ticks, ..self.shape };
        shape.validate()?;
        self.shape = shape;
        Ok(())
    }

    /// Sets one weight. Fails at masked positions.
    pub fn set_weight(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let n = self.neurons();
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!(
                "weight index ({i}, {j}) out of range for {n} neurons"
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("weight"));
        }
        if !self.mask.get(i, j) && value != 0.0 {
            return Err(Error::MaskedWeight {
                row: i,
                col: j,
                value,
            });
        }
        self.weights[[i, j]] = value;
        Ok(())
    }

    /// Writes `update(i, j, w)` into every allowed position. Masked entries
    /// are never visited.
    pub(crate) fn update_allowed(&mut self, mut update: impl FnMut(usize, usize, f64) -> f64) {
        let n = self.neurons();
        for i in 0..n {
            for j in self.shape.inputs..n {
                if self.mask.get(i, j) {
                    let w = &mut self.weights[[i, j]];
                    *w = update(i, j, *w);
                }
            }
        }
    }

    /// Builds `S_0`: features, then the bias, then zeros.
    pub fn initial_state(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_features(x)?;
        let mut s = vec![0.0; self.neurons()];
        s[..x.len()].copy_from_slice(x);
        s[self.shape.bias_index()] = 1.0;
        Ok(s)
    }

    pub(crate) fn check_features(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.shape.features() {
            return Err(Error::DimensionMismatch {
                context: "input features",
                expected: self.shape.features(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input features"));
        }
        Ok(())
    }

    /// One tick without allocation. `preact` receives `prev * A` and `next`
    /// the activated state. `next` may not alias `prev`.
    pub(crate) fn step_into(&self, prev: &[f64], x: &[f64], preact: &mut [f64], next: &mut [f64]) {
        let n = self.neurons();
        preact.fill(0.0);
        for (k, &s) in prev.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let row = self.weights.row(k);
            let row = row.as_slice().expect("weights are contiguous");
            for (t, &a) in preact.iter_mut().zip(row) {
                *t += s * a;
            }
        }
        for o in 0..n {
            next[o] = self.activations[o].value(preact[o]);
        }
        if self.clamp_inputs {
            self.clamp(next, x);
        }
    }

    #[inline]
    pub(crate) fn clamp(&self, state: &mut [f64], x: &[f64]) {
        state[..x.len()].copy_from_slice(x);
        state[self.shape.bias_index()] = 1.0;
    }
}

/// Builds a model with the given topology and initial weights. The same
/// arguments always produce the same weights.
pub fn build_model(
    shape: NetworkShape,
    mask: Mask,
    activation: Activation,
    init: InitSpec,
    seed: u64,
) -> Result<Model> {
    shape.validate()?;
    mask.validate(&shape)?;
    let n = shape.neurons();
    let mut weights = Array2::zeros((n, n));
    if init == InitSpec::UniformScaled {
        let bound = (6.0 / n as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // One draw per entry in row-major order, so an edge's initial weight
        // does not depend on which other edges are present.
        for ((i, j), w) in weights.indexed_iter_mut() {
            let draw = rng.random_range(-bound..bound);
            if mask.get(i, j) {
                *w = draw;
            }
        }
    }
    Model::new(shape, mask, weights, vec![activation; n])
}

/// Embeds a stack of dense layers into one adjacency matrix.
///
/// Block `l` (rows of layer `l`, columns of layer `l + 1`) holds `blocks[l]`.
/// The first block's rows are the input neurons, so its last row acts as
/// the bias row. The resulting network needs `L + 1` ticks.
pub fn from_mlp_layers(blocks: &[Array2<f64>], activation: Activation) -> Result<Model> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty layer list".into()))?;
    for (l, pair) in blocks.windows(2).enumerate() {
        if pair[0].ncols() != pair[1].nrows() {
            return Err(Error::InvalidArgument(format!(
                "layer {l} has {} outputs but layer {} has {} inputs",
                pair[0].ncols(),
                l + 1,
                pair[1].nrows()
            )));
        }
    }
    let inputs = first.nrows();
    let outputs = blocks.last().map(|b| b.ncols()).unwrap_or(0);
    let n = inputs + blocks.iter().map(|b| b.ncols()).sum::<usize>();
    let shape = NetworkShape::new(inputs, n - inputs - outputs, outputs, blocks.len() + 1)?;

    let mut weights = Array2::zeros((n, n));
    let mut mask = Mask::empty(n);
    let mut row0 = 0;
    for block in blocks {
        let col0 = row0 + block.nrows();
        for ((i, j), &w) in block.indexed_iter() {
            weights[[row0 + i, col0 + j]] = w;
            mask.set(row0 + i, col0 + j, true);
        }
        row0 = col0;
    }
    Model::new(shape, mask, weights, vec![activation; n])
}

/// States and pre-activations recorded over every tick.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `S_0 .. S_{t-1}`.
    pub states: Vec<Vec<f64>>,
    /// `T_1 .. T_{t-1}`.
    pub preacts: Vec<Vec<f64>>,
    /// The features the trace was computed from (bias excluded).
    pub input: Vec<f64>,
}

impl ForwardTrace {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trace holds at least S_0")
    }
}

/// One tick: returns `(T, S')` with `T = S A` and `S' = phi(T)`, clamped when
/// the model clamps inputs.
pub fn step(model: &Model, state: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = model.neurons();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            context: "state vector",
            expected: n,
            actual: state.len(),
        });
    }
    model.check_features(x)?;
    let mut preact = vec![0.0; n];
    let mut next = vec![0.0; n];
    model.step_into(state, x, &mut preact, &mut next);
    Ok((preact, next))
}

/// Runs `ticks - 1` steps from `S_0` and records the trace.
pub fn forward(model: &Model, x: &[f64]) -> Result<ForwardTrace> {
    let n = model.neurons();
    let ticks = model.shape().ticks;
    let mut states = Vec::with_capacity(ticks);
    let mut preacts = Vec::with_capacity(ticks.saturating_sub(1));
    states.push(model.initial_state(x)?);
    for tick in 1..ticks {
        let mut preact = vec![0.0; n];
        let mut next = vec![0.0; n];
        model.step_into(&states[tick - 1], x, &mut preact, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { tick });
        }
        preacts.push(preact);
        states.push(next);
    }
    Ok(ForwardTrace {
        states,
        preacts,
        input: x.to_vec(),
    })
}

/// Output neuron states of the last tick.
pub fn readout(trace: &ForwardTrace, shape: &NetworkShape) -> Result<Vec<f64>> {
    if trace.states.len() != shape.ticks {
        return Err(Error::DimensionMismatch {
            context: "trace length",
            expected: shape.ticks,
            actual: trace.states.len(),
        });
    }
    let last = trace.final_state();
    if last.len() != shape.neurons() {
        return Err(Error::DimensionMismatch {
            context: "state vector",
            expected: shape.neurons(),
            actual: last.len(),
        });
    }
    Ok(last[shape.output_range()].to_vec())
}

/// Readout of a single input.
pub fn predict_outputs(model: &Model, x: &[f64]) -> Result<Vec<f64>> {
    readout(&forward(model, x)?, model.shape())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted class of a single input.
pub fn predict_class(model: &Model, x: &[f64]) -> Result<usize> {
    Ok(argmax(&predict_outputs(model, x)?))
}
