//! Mesh neural networks trained with forward-only gradient propagation.
//!
//! A mesh network is a single weight matrix over all neurons. Neurons are
//! ordered inputs, hidden, outputs; the last input neuron is a constant bias.
//! A boolean [`Mask`] decides which connections exist. The state of every
//! neuron is updated synchronously for a fixed number of ticks, and the
//! output neurons of the final state are the prediction.
//!
//! Gradients are carried forward alongside the state: every tick updates
//! the sensitivity of each neuron to each weight, so no backward pass and no
//! stored history are needed. Memory is fixed by the neuron count and does
//! not grow with the number of ticks.
//!
//! ```
//! use mnn::{build_model, data, train, Activation, InitSpec, Mask, NetworkShape, TrainConfig};
//!
//! let shape = NetworkShape::new(3, 5, 2, 3)?;
//! let model = build_model(shape, Mask::mesh(&shape), Activation::Relu, InitSpec::UniformScaled, 0)?;
//! let moons = data::gen_moons(200, 0.1, 0)?;
//! let (train_set, test_set, _scaler) = data::split_standardize(&moons, 0.7, 0)?;
//! let cfg = TrainConfig { epochs: 20, learning_rate: 0.01, ..TrainConfig::default() };
//! let (model, metrics) = train(model, &train_set, &cfg)?;
//! assert_eq!(metrics.epochs.len(), 20);
//! let accuracy = mnn::evaluate(&model, &test_set)?;
//! assert!((0.0..=1.0).contains(&accuracy));
//! # Ok::<(), mnn::Error>(())
//! ```

mod error;

pub mod data;
pub mod fop;
pub mod gradcheck;
pub mod model_file;
pub mod network;
pub mod region;
pub mod topology;
pub mod training;

pub use error::{Error, Result};
pub use fop::{error_gradient, fop_step, forward_with_grad, FopWorkspace, GradientTensor};
pub use model_file::{load_model, save_model, SavedModel};
pub use network::{
    argmax, build_model, forward, from_mlp_layers, predict_class, predict_outputs, readout, step, Activation,
    ForwardTrace, InitSpec, Model, NetworkShape,
};
pub use region::{decision_region_grid, RegionGrid};
pub use topology::Mask;
pub use training::{evaluate, train, Metrics, OptimizerKind, TrainConfig};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mesh-networks.md")]
    mod mesh_networks {}
    #[doc = include_str!("../../../book/src/forward-gradients.md")]
    mod forward_gradients {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/gradient-checking.md")]
    mod gradient_checking {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
