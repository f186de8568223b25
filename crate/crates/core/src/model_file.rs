//! JSON persistence for trained models.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "shape": { "inputs": 3, "hidden": 5, "outputs": 2, "ticks": 3 },
//!   "activation": "relu",            // or one tag per neuron
//!   "clamp_inputs": true,
//!   "mask": [0, 0, 0, 1, ...],       // row-major, N^2 entries
//!   "weights": [0.0, ...],           // row-major, N^2 entries
//!   "scaler": { "mean": [...], "std": [...] },          // optional
//!   "split": { "seed": 1, "train_fraction": 0.7 }       // optional
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a saved model reloads
//! with bit-identical weights.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::Scaler;
use crate::network::{Activation, Model, NetworkShape};
use crate::topology::Mask;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivationSpec {
    Uniform(Activation),
    PerNeuron(Vec<Activation>),
}

/// How the training split was drawn, so it can be reproduced later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub seed: u64,
    pub train_fraction: f64,
}

/// On-disk representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub shape: NetworkShape,
    pub activation: ActivationSpec,
    pub clamp_inputs: bool,
    pub mask: Vec<u8>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitInfo>,
}

/// A model together with the preprocessing it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: Model,
    pub scaler: Option<Scaler>,
    pub split: Option<SplitInfo>,
}

impl ModelFile {
    pub fn from_saved(saved: &SavedModel) -> Self {
        let model = &saved.model;
        let activation = match model.uniform_activation() {
            Some(a) => ActivationSpec::Uniform(a),
            None => ActivationSpec::PerNeuron(model.activations().to_vec()),
        };
        ModelFile {
            format_version: FORMAT_VERSION,
            shape: *model.shape(),
            activation,
            clamp_inputs: model.clamp_inputs(),
            mask: model.mask().to_flat(),
            weights: model.weights().iter().copied().collect(),
            scaler: saved.scaler.clone(),
            split: saved.split,
        }
    }

    pub fn into_saved(self) -> Result<SavedModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.format_version,
                supported: FORMAT_VERSION,
            });
        }
        self.shape.validate()?;
        let n = self.shape.neurons();
        if self.mask.len() != n * n {
            return Err(Error::ModelFile(format!(
                "mask has {} entries, expected {}",
                self.mask.len(),
                n * n
            )));
        }
        if self.weights.len() != n * n {
            return Err(Error::ModelFile(format!(
                "weights has {} entries, expected {}",
                self.weights.len(),
                n * n
            )));
        }
        let rows: Vec<Vec<u8>> = self.mask.chunks(n).map(<[u8]>::to_vec).collect();
        let mask = Mask::from_rows(&rows)?;
        let activations = match self.activation {
            ActivationSpec::Uniform(a) => vec![a; n],
            ActivationSpec::PerNeuron(list) => list,
        };
        let weights = Array2::from_shape_vec((n, n), self.weights).expect("length checked");
        let model = Model::new(self.shape, mask, weights, activations)?.with_clamp_inputs(self.clamp_inputs);
        if let Some(scaler) = &self.scaler {
            if scaler.feature_count() != self.shape.features() || scaler.std.len() != scaler.mean.len() {
                return Err(Error::ModelFile(format!(
                    "scaler covers {} features, the network takes {}",
                    scaler.feature_count(),
                    self.shape.features()
                )));
            }
        }
        Ok(SavedModel {
            model,
            scaler: self.scaler,
            split: self.split,
        })
    }
}

pub fn to_json(saved: &SavedModel) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&ModelFile::from_saved(saved))?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> Result<SavedModel> {
    // Check the version before the schema so old or future files get a
    // version error rather than a field error.
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                supported: FORMAT_VERSION,
            })
        }
        None => return Err(Error::ModelFile("missing format_version".into())),
    }
    let file: ModelFile = serde_json::from_value(value)?;
    file.into_saved()
}

pub fn save_model(model: &Model, scaler: Option<&Scaler>, path: impl AsRef<Path>) -> Result<()> {
    let saved = SavedModel {
        model: model.clone(),
        scaler: scaler.cloned(),
        split: None,
    };
    save(&saved, path)
}

pub fn save(saved: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(saved)?).map_err(|e| Error::file(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    from_json(&text)
}
