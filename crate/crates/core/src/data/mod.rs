//! Labeled datasets: synthetic generators, CSV ingestion and splitting.
//!
//! Generated datasets list their samples class by class. Use
//! [`split_standardize`] to obtain shuffled, stratified train/test sets.

mod csv_io;
mod split;
mod synthetic;

use ndarray::{Array2, Axis};

use crate::{Error, Result};

pub use csv_io::{iris, load_csv, parse_csv, write_csv, IRIS_CSV};
pub use split::{split_standardize, Scaler};
pub use synthetic::{
    double_blobs, gen_blobs, gen_circles, gen_moons, gen_spirals, single_blobs, DOUBLE_BLOB_CENTERS,
    DOUBLE_BLOB_LABELS, SINGLE_BLOB_CENTERS, SINGLE_BLOB_STDS,
};

/// Feature matrix with one integer class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset labels",
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: class_count,
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        // Row slices are handed out directly.
        let features = features.as_standard_layout().into_owned();
        Ok(LabeledDataset {
            features,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Features and label of sample `index`.
    #[inline]
    pub fn sample(&self, index: usize) -> (&[f64], usize) {
        let row = self.features.row(index);
        (
            row.to_slice().expect("rows are contiguous"),
            self.labels[index],
        )
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Samples at `indices`, in that order. Keeps the class count.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
        }
    }

    /// Per-column `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.features
            .columns()
            .into_iter()
            .map(|col| {
                col.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }
}
