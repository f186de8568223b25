//! Finite-difference oracle for the error gradient.
//!
//! [`finite_diff_gradient`] only runs the plain forward pass and the loss;
//! it shares no code with the gradient propagation it is meant to check.

use std::fmt;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fop::{error_gradient, forward_with_grad};
use crate::network::{forward, readout, Activation, InitSpec, Model, NetworkShape};
use crate::topology::Mask;
use crate::training::softmax_cross_entropy;
use crate::{build_model, Error, Result};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Denominator floor of the relative error.
const REL_FLOOR: f64 = 1e-8;

/// Central differences of an arbitrary loss of the readout with respect to
/// every allowed weight. Masked entries are 0.
pub fn finite_diff_gradient_with<F>(model: &Model, x: &[f64], h: f64, loss: F) -> Result<Array2<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let n = model.neurons();
    let eval = |m: &Model| -> Result<f64> {
        let y = readout(&forward(m, x)?, m.shape())?;
        let e = loss(&y)?;
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::NonFinite("loss at a perturbed point"))
        }
    };
    let mut g = Array2::zeros((n, n));
    let mut probe = model.clone();
    for (i, j) in model.mask().edges() {
        let w = model.weights()[[i, j]];
        probe.set_weight(i, j, w + h)?;
        let plus = eval(&probe)?;
        probe.set_weight(i, j, w - h)?;
        let minus = eval(&probe)?;
        probe.set_weight(i, j, w)?;
        g[[i, j]] = (plus - minus) / (2.0 * h);
    }
    Ok(g)
}

/// Central differences of the softmax cross-entropy loss.
pub fn finite_diff_gradient(model: &Model, x: &[f64], label: usize, h: f64) -> Result<Array2<f64>> {
    finite_diff_gradient_with(model, x, h, |y| Ok(softmax_cross_entropy(y, label)?.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Entry with the largest relative error, if any entry differs.
    pub worst_index: Option<(usize, usize)>,
    pub rel_tol: f64,
    pub pass: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: max relative error {:.3e} (tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.max_rel_err,
            self.rel_tol
        )?;
        if let Some((i, j)) = self.worst_index {
            write!(f, " at ({i}, {j})")?;
        }
        Ok(())
    }
}

/// Entry-wise relative error `|a - b| / max(|a|, |b|, 1e-8)`; passes when the
/// maximum is within `rel_tol`.
pub fn compare(g: &Array2<f64>, g_fd: &Array2<f64>, rel_tol: f64) -> Result<GradCheckReport> {
    if g.dim() != g_fd.dim() {
        return Err(Error::DimensionMismatch {
            context: "gradient comparison",
            expected: g.len(),
            actual: g_fd.len(),
        });
    }
    let mut max_rel_err = 0.0;
    let mut worst_index = None;
    for ((idx, &a), &b) in g.indexed_iter().zip(g_fd.iter()) {
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR);
        // NaN compares false, so route it explicitly.
        if rel > max_rel_err || rel.is_nan() {
            max_rel_err = if rel.is_nan() { f64::INFINITY } else { rel };
            worst_index = Some(idx);
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst_index,
        rel_tol,
        pass: max_rel_err <= rel_tol,
    })
}

/// A randomly drawn gradient-check problem.
#[derive(Debug, Clone)]
pub struct GradCheckCase {
    pub model: Model,
    pub input: Vec<f64>,
    pub label: usize,
}

/// Smallest pre-activation magnitude accepted for ReLU cases.
pub const RELU_KINK_MARGIN: f64 = 1e-4;

/// Draws a network of `neurons` neurons with every non-input connection
/// allowed, weights and features uniform on `(-1, 1)`, and a random label.
///
/// Layout: 2 input neurons below 5 neurons, 3 from there on; 1 output for
/// `N = 3`, 3 outputs from `N = 8`, otherwise 2. ReLU cases are redrawn until
/// no pre-activation lies within [`RELU_KINK_MARGIN`] of the kink.
pub fn random_case(neurons: usize, ticks: usize, activation: Activation, seed: u64) -> Result<GradCheckCase> {
    if neurons < 3 {
        return Err(Error::InvalidArgument(format!(
            "gradient checks need at least 3 neurons, got {neurons}"
        )));
    }
    let inputs = if neurons < 5 { 2 } else { 3 };
    let outputs = match neurons {
        3 => 1,
        n if n >= 8 => 3,
        _ => 2,
    };
    let shape = NetworkShape::new(inputs, neurons - inputs - outputs, outputs, ticks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let mut model = build_model(shape, Mask::dense(&shape), activation, InitSpec::Zero, 0)?;
        for i in 0..neurons {
            for j in inputs..neurons {
                model.set_weight(i, j, rng.random_range(-1.0..1.0))?;
            }
        }
        let input: Vec<f64> = (0..shape.features()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = rng.random_range(0..outputs);
        if activation == Activation::Relu {
            let trace = forward(&model, &input)?;
            let near_kink = trace
                .preacts
                .iter()
                .any(|t| t[inputs..].iter().any(|v| v.abs() < RELU_KINK_MARGIN));
            if near_kink {
                continue;
            }
        }
        return Ok(GradCheckCase { model, input, label });
    }
    Err(Error::InvalidArgument("could not draw a ReLU case away from the kink".into()))
}

/// Forward-only gradient of the softmax cross-entropy loss for one sample.
pub fn fop_gradient(model: &Model, x: &[f64], label: usize) -> Result<Array2<f64>> {
    let (trace, d) = forward_with_grad(model, x)?;
    let y = readout(&trace, model.shape())?;
    let (_, d_e_d_y) = softmax_cross_entropy(&y, label)?;
    error_gradient(&d_e_d_y, &d, model.shape(), model.mask())
}

/// Compares the forward-only gradient of `case` with central differences.
pub fn check_case(case: &GradCheckCase, h: f64, rel_tol: f64) -> Result<GradCheckReport> {
    let g = fop_gradient(&case.model, &case.input, case.label)?;
    let g_fd = finite_diff_gradient(&case.model, &case.input, case.label, h)?;
    compare(&g, &g_fd, rel_tol)
}
