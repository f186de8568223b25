//! Connection masks.
//!
//! A [`Mask`] is the binary adjacency pattern of a mesh network: entry
//! `(i, j)` is set when neuron `i` may feed neuron `j`. Weights at unset
//! positions are structurally zero, and so are their gradients.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::network::NetworkShape;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask(Array2<bool>);

impl Mask {
    /// A mask with no connections.
    pub fn empty(neurons: usize) -> Self {
        Mask(Array2::from_elem((neurons, neurons), false))
    }

    pub fn from_array(mask: Array2<bool>) -> Result<Self> {
        if !mask.is_square() {
            return Err(Error::InvalidMask(format!(
                "mask must be square, got {}x{}",
                mask.nrows(),
                mask.ncols()
            )));
        }
        Ok(Mask(mask))
    }

    /// Builds a mask from 0/1 rows.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut mask = Array2::from_elem((n, n), false);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMask(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                mask[[i, j]] = match v {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(Error::InvalidMask(format!(
                            "entry ({i}, {j}) is {other}, expected 0 or 1"
                        )))
                    }
                };
            }
        }
        Ok(Mask(mask))
    }

    /// Every non-input neuron may receive from every neuron, self-loops included.
    pub fn dense(shape: &NetworkShape) -> Self {
        let n = shape.neurons();
        Mask(Array2::from_shape_fn((n, n), |(_, j)| j >= shape.inputs))
    }

    /// The experimental topology generalized to any `(I, H, O)`:
    /// inputs feed hidden and output neurons, hidden neurons feed each other
    /// (no self-loops) and the outputs, and outputs feed back into the hidden
    /// layer.
    pub fn mesh(shape: &NetworkShape) -> Self {
        let n = shape.neurons();
        let hidden = shape.hidden_range();
        let outputs = shape.output_range();
        Mask(Array2::from_shape_fn((n, n), |(i, j)| {
            if i < shape.inputs {
                j >= shape.inputs
            } else if hidden.contains(&i) {
                (hidden.contains(&j) && i != j) || outputs.contains(&j)
            } else {
                hidden.contains(&j)
            }
        }))
    }

    pub fn neurons(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.0[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, allowed: bool) {
        self.0[[i, j]] = allowed;
    }

    pub fn as_array(&self) -> &Array2<bool> {
        &self.0
    }

    /// Allowed connections `(i, j)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0
            .indexed_iter()
            .filter(|(_, &allowed)| allowed)
            .map(|((i, j), _)| (i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.0.iter().filter(|&&allowed| allowed).count()
    }

    /// Checks the mask against a shape: matching size and no connection into
    /// an input neuron.
    pub fn validate(&self, shape: &NetworkShape) -> Result<()> {
        let n = shape.neurons();
        if self.neurons() != n {
            return Err(Error::InvalidMask(format!(
                "mask is {0}x{0} but the shape has {n} neurons",
                self.neurons()
            )));
        }
        for i in 0..n {
            for j in 0..shape.inputs {
                if self.get(i, j) {
                    return Err(Error::InvalidMask(format!(
                        "connection ({i}, {j}) feeds input neuron {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Row-major 0/1 values.
    pub fn to_flat(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }

    /// Parses a CSV of 0/1 rows (no header).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| cell.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidMask(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.0.rows() {
            let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}
