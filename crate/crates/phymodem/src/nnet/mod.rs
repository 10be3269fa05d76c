//! Self-contained dense neural network engine.
//!
//! Everything a small MLP needs and nothing more: fan-in-scaled Gaussian
//! init, forward evaluation, exact backprop for the supported
//! activation/loss pairings, mini-batch SGD with a fixed learning rate, a
//! finite-difference gradient checker, and a binary model file format.
//! All math is f64 and single-threaded, so training runs are
//! byte-reproducible for a given seed.
//!
//! Supported pairings: `mse` with a relu/sigmoid/linear output layer,
//! `binary_cross_entropy` with a sigmoid output layer, and
//! `categorical_cross_entropy` with a softmax output layer. Softmax is
//! rejected anywhere except the final layer, and cross-entropy losses are
//! computed in log space fused with their output activation so gradients
//! stay exact for saturated units.

mod gradcheck;
mod io;
mod loss;
mod network;
mod train;

pub use gradcheck::gradient_check;
pub use io::{load_model, save_model, ModelFileError};
pub use loss::Loss;
pub use network::{network_init, Activation, LayerSpec, Network, NnetError};
pub use train::{loss_and_gradient, train, Dataset, Gradients, TrainReport, TrainStatus, TrainingConfig};
