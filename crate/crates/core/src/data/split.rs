use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::{Error, Result};

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population mean and standard deviation of each column. Constant
    /// columns get a standard deviation of 1.
    pub fn fit(data: &LabeledDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = data.len() as f64;
        let f = data.features();
        let mean: Vec<f64> = f.columns().into_iter().map(|c| c.sum() / n).collect();
        let std = f
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(c, &m)| {
                let var = c.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Scaler { mean, std })
    }

    /// The identity transform for `features` columns.
    pub fn identity(features: usize) -> Self {
        Scaler {
            mean: vec![0.0; features],
            std: vec![1.0; features],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.feature_count() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                context: "scaler features",
                expected: self.feature_count(),
                actual: data.feature_count(),
            });
        }
        let mut features = data.features().clone();
        for mut row in features.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        LabeledDataset::new(features, data.labels().to_vec(), data.class_count())
    }
}

/// Stratified shuffle split followed by standardization.
///
/// Each class contributes `round(count * train_fraction)` samples to the
/// training set (at least one, leaving at least one for testing). The
/// scaler is fit on the training set and applied to both sets.
pub fn split_standardize(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, Scaler)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..data.class_count() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&s| data.labels()[s] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} sample(s); stratified splitting needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let take = ((members.len() as f64 * train_fraction).round() as usize).clamp(1, members.len() - 1);
        train_idx.extend_from_slice(&members[..take]);
        test_idx.extend_from_slice(&members[take..]);
    }
    if train_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);

    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let scaler = Scaler::fit(&train)?;
    Ok((scaler.transform(&train)?, scaler.transform(&test)?, scaler))
}
