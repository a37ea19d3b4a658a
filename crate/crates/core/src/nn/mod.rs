//! Recurrent gain estimator: kernels, weights container and forward pass.

pub mod layers;
pub mod model;
pub mod network;

pub use layers::{Activation, LayerKind, LayerSpec, QuantizedTensor, Tensor};
pub use model::{Model, Topology};
pub use network::{network_forward, NetworkState};
