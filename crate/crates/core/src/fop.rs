//! Forward-only gradient propagation.
//!
//! Alongside each state update the engine carries the rank-3 tensor
//! `D[i, j, o] = dS_{n,o} / dA[i, j]` and advances it with
//!
//! ```text
//! D_n[i, j, o] = phi'(T_n[o]) * ( sum_k D_{n-1}[i, j, k] A[k, o]  +  [o == j] S_{n-1}[i] )
//! ```
//!
//! The sum is a dense product of the `(N^2 x N)` flattening of `D_{n-1}`
//! with `A`. The second term is the seed tensor: it is nonzero only on the
//! `o == j` diagonal and is added in place as a rank-1 update instead of
//! being materialized. Only the current `D` and one temporary of the same
//! size are ever alive, whatever the tick count.
//!
//! Once the last state is reached, the error gradient is the contraction of
//! `dE/dy` with the output slices of `D`:
//! `G[i, j] = sum_o dE/dy[o] * D[i, j, N - O + o]`.
//!
//! Cost per sample is `O(t N^4)` time and `O(N^3)` space. Rows of `D` that
//! belong to masked connections are never computed, and neither are the
//! slices of input neurons (their columns of `A` are zero, so the slices
//! stay zero).

use std::ops::Range;

use ndarray::{Array2, Array3, ArrayView2, Ix2};

use crate::network::{ForwardTrace, Model, NetworkShape};
use crate::topology::Mask;
use crate::{Error, Result};

/// `D[i, j, o] = dS_{n,o} / dA[i, j]` at tick `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTensor {
    data: Array3<f64>,
    tick: usize,
}

impl GradientTensor {
    pub fn zeros(neurons: usize) -> Self {
        GradientTensor {
            data: Array3::zeros((neurons, neurons, neurons)),
            tick: 0,
        }
    }

    pub fn from_array(data: Array3<f64>, tick: usize) -> Result<Self> {
        let (a, b, c) = data.dim();
        if a != b || b != c {
            return Err(Error::InvalidArgument(format!(
                "gradient tensor must be cubic, got {a}x{b}x{c}"
            )));
        }
        Ok(GradientTensor { data, tick })
    }

    pub fn neurons(&self) -> usize {
        self.data.dim().0
    }

    pub fn tick(&self) -> usize {
        self.tick
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, o: usize) -> f64 {
        self.data[[i, j, o]]
    }

    pub fn as_array(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array3<f64> {
        self.data
    }

    /// The `(N^2 x N)` flattening, row `i * N + j`.
    pub fn flat(&self) -> ArrayView2<'_, f64> {
        let n = self.neurons();
        self.data
            .view()
            .into_shape_with_order((n * n, n))
            .expect("standard layout")
            .into_dimensionality::<Ix2>()
            .expect("rank 2")
    }
}

/// `result[i, j, o] = sum_k D[i, j, k] A[k, o]`, computed as one dense
/// `(N^2 x N) . (N x N)` product.
pub fn contract(d: &GradientTensor, a: &Array2<f64>) -> Result<Array3<f64>> {
    let n = d.neurons();
    if a.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "contraction matrix",
            expected: n * n,
            actual: a.len(),
        });
    }
    let product = d.flat().dot(a);
    Ok(product
        .into_shape_with_order((n, n, n))
        .expect("N^2 x N reshapes to N x N x N"))
}

/// Allowed rows `i * N + j` of the flattened tensor.
fn active_rows(mask: &Mask) -> Vec<usize> {
    let n = mask.neurons();
    mask.edges().map(|(i, j)| i * n + j).collect()
}

/// One propagation step over the selected rows.
///
/// `prev` and `next` are flattened `N^2 x N` buffers. Only `next[r, outputs]`
/// for `r` in `rows` and `o` in `cols` is written; for every other `o` of a
/// selected row, `next` is set to zero. `prev[r, k]` is read for `k` in
/// `inner`.
#[allow(clippy::too_many_arguments)]
fn propagate_rows(
    a: &Array2<f64>,
    prev: &[f64],
    next: &mut [f64],
    rows: &[usize],
    state_prev: &[f64],
    deriv: &[f64],
    inner: Range<usize>,
    cols: Range<usize>,
    first_step: bool,
) {
    let n = state_prev.len();
    let a = a.as_slice().expect("weights are contiguous");
    for &r in rows {
        let (i, j) = (r / n, r % n);
        let out = &mut next[r * n..(r + 1) * n];
        out.fill(0.0);
        if !first_step {
            let d_row = &prev[r * n..(r + 1) * n];
            for k in inner.clone() {
                let d = d_row[k];
                if d == 0.0 {
                    continue;
                }
                let a_row = &a[k * n + cols.start..k * n + cols.end];
                for (acc, &w) in out[cols.clone()].iter_mut().zip(a_row) {
                    *acc += d * w;
                }
            }
        }
        if cols.contains(&j) {
            out[j] += state_prev[i];
        }
        for o in cols.clone() {
            out[o] *= deriv[o];
        }
    }
}

/// Advances `D_{n-1}` to `D_n` given the previous state and the
/// pre-activation `T_n` that produced the new state.
pub fn fop_step(
    model: &Model,
    state_prev: &[f64],
    preact: &[f64],
    d_prev: &GradientTensor,
) -> Result<GradientTensor> {
    let n = model.neurons();
    for (context, len) in [
        ("previous state", state_prev.len()),
        ("pre-activation", preact.len()),
        ("gradient tensor", d_prev.neurons()),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                actual: len,
            });
        }
    }
    let deriv: Vec<f64> = preact
        .iter()
        .zip(model.activations())
        .map(|(&t, act)| act.eval(t).1)
        .collect();
    let prev = d_prev.data.as_slice().expect("standard layout");
    let mut next = vec![0.0; n * n * n];
    let rows = active_rows(model.mask());
    propagate_rows(
        model.weights(),
        prev,
        &mut next,
        &rows,
        state_prev,
        &deriv,
        0..n,
        0..n,
        false,
    );
    if model.clamp_inputs() {
        let inputs = model.shape().inputs;
        for &r in &rows {
            next[r * n..r * n + inputs].fill(0.0);
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state gradient"));
    }
    Ok(GradientTensor {
        data: Array3::from_shape_vec((n, n, n), next).expect("N^3 entries"),
        tick: d_prev.tick + 1,
    })
}

/// `G[i, j] = sum_o dEdy[o] * D[i, j, N - O + o]`, zero at masked positions.
pub fn error_gradient(
    d_e_d_y: &[f64],
    d: &GradientTensor,
    shape: &NetworkShape,
    mask: &Mask,
) -> Result<Array2<f64>> {
    let n = shape.neurons();
    if d.neurons() != n || mask.neurons() != n {
        return Err(Error::DimensionMismatch {
            context: "gradient tensor",
            expected: n,
            actual: d.neurons(),
        });
    }
    if d_e_d_y.len() != shape.outputs {
        return Err(Error::DimensionMismatch {
            context: "loss derivative",
            expected: shape.outputs,
            actual: d_e_d_y.len(),
        });
    }
    let first_output = shape.output_range().start;
    let mut g = Array2::zeros((n, n));
    for (i, j) in mask.edges() {
        g[[i, j]] = d_e_d_y
            .iter()
            .enumerate()
            .map(|(o, &e)| e * d.data[[i, j, first_output + o]])
            .sum();
    }
    Ok(g)
}

/// Reusable buffers for per-sample gradient propagation.
///
/// Holds the current state tensor and one temporary; both are swapped
/// every tick, so the footprint does not grow with the tick count.
#[derive(Debug, Clone)]
pub struct FopWorkspace {
    neurons: usize,
    rows: Vec<usize>,
    d: Vec<f64>,
    scratch: Vec<f64>,
    state: Vec<f64>,
    next: Vec<f64>,
    preact: Vec<f64>,
    deriv: Vec<f64>,
    tick: usize,
}

impl FopWorkspace {
    /// Allocates buffers for models sharing `model`'s size and mask.
    pub fn new(model: &Model) -> Self {
        let n = model.neurons();
        FopWorkspace {
            neurons: n,
            rows: active_rows(model.mask()),
            d: vec![0.0; n * n * n],
            scratch: vec![0.0; n * n * n],
            state: vec![0.0; n],
            next: vec![0.0; n],
            preact: vec![0.0; n],
            deriv: vec![0.0; n],
            tick: 0,
        }
    }

    /// Runs the forward pass and the gradient recurrence for one input.
    /// `on_tick` sees `(T_n, S_n)` after every step. Returns the final state.
    pub fn run_with(
        &mut self,
        model: &Model,
        x: &[f64],
        mut on_tick: impl FnMut(&[f64], &[f64]),
    ) -> Result<&[f64]> {
        let n = self.neurons;
        if model.neurons() != n {
            return Err(Error::DimensionMismatch {
                context: "workspace size",
                expected: n,
                actual: model.neurons(),
            });
        }
        model.check_features(x)?;
        let inputs = model.shape().inputs;

        self.state.fill(0.0);
        model.clamp(&mut self.state, x);
        for &r in &self.rows {
            self.d[r * n..(r + 1) * n].fill(0.0);
        }
        self.tick = 0;

        for tick in 1..model.shape().ticks {
            model.step_into(&self.state, x, &mut self.preact, &mut self.next);
            if self.next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericOverflow { tick });
            }
            for ((d, &t), act) in self.deriv.iter_mut().zip(&self.preact).zip(model.activations()) {
                *d = act.eval(t).1;
            }
            // Input slices stay zero: no weight feeds an input neuron.
            propagate_rows(
                model.weights(),
                &self.d,
                &mut self.scratch,
                &self.rows,
                &self.state,
                &self.deriv,
                inputs..n,
                inputs..n,
                tick == 1,
            );
            std::mem::swap(&mut self.d, &mut self.scratch);
            std::mem::swap(&mut self.state, &mut self.next);
            self.tick = tick;
            on_tick(&self.preact, &self.state);
            let finite = self
                .rows
                .iter()
                .all(|&r| self.d[r * n + inputs..(r + 1) * n].iter().all(|v| v.is_finite()));
            if !finite {
                return Err(Error::NonFinite("state gradient"));
            }
        }
        Ok(&self.state)
    }

    pub fn run(&mut self, model: &Model, x: &[f64]) -> Result<&[f64]> {
        self.run_with(model, x, |_, _| {})
    }

    /// Output neuron states after the last [`run`](Self::run).
    pub fn outputs(&self, shape: &NetworkShape) -> &[f64] {
        &self.state[shape.output_range()]
    }

    /// Error gradient over the allowed connections, in row-major edge order.
    pub fn edge_gradient(&self, shape: &NetworkShape, d_e_d_y: &[f64], out: &mut [f64]) {
        let n = self.neurons;
        let first_output = shape.output_range().start;
        for (g, &r) in out.iter_mut().zip(&self.rows) {
            let slice = &self.d[r * n + first_output..(r + 1) * n];
            *g = d_e_d_y.iter().zip(slice).map(|(&e, &d)| e * d).sum();
        }
    }

    /// Number of allowed connections.
    pub fn edge_count(&self) -> usize {
        self.rows.len()
    }

    /// Allowed connections `(i, j)` in the order used by
    /// [`edge_gradient`](Self::edge_gradient).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().map(move |&r| (r / self.neurons, r % self.neurons))
    }

    /// Moves the current tensor out.
    pub fn into_gradient(self) -> GradientTensor {
        let n = self.neurons;
        GradientTensor {
            data: Array3::from_shape_vec((n, n, n), self.d).expect("N^3 entries"),
            tick: self.tick,
        }
    }
}

/// Forward pass with the state gradient carried alongside. Returns the full
/// trace and `D` at the last tick.
pub fn forward_with_grad(model: &Model, x: &[f64]) -> Result<(ForwardTrace, GradientTensor)> {
    let ticks = model.shape().ticks;
    let mut states = Vec::with_capacity(ticks);
    let mut preacts = Vec::with_capacity(ticks.saturating_sub(1));
    states.push(model.initial_state(x)?);
    let mut ws = FopWorkspace::new(model);
    ws.run_with(model, x, |t, s| {
        preacts.push(t.to_vec());
        states.push(s.to_vec());
    })?;
    let trace = ForwardTrace {
        states,
        preacts,
        input: x.to_vec(),
    };
    Ok((trace, ws.into_gradient()))
}
