//! Minimal feed-forward substrate: dense and per-cell layers, ReLU/Tanh,
//! mean-squared-error gradients and Adam. All arithmetic is `f64`.

pub mod checkpoint;
mod layer;
mod network;

pub use layer::{Activation, Dense, Layer, ParamGrad, PerCellLinear};
pub use network::{copy_parameters, mse_grad, per_cell_encoder, AdamConfig, Gradients, Network};
