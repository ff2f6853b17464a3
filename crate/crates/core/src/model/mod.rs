//! Hybrid CNN + RNN step classifier: layers, forward pass with
//! window-to-window recurrence, backpropagation, training, FLOPs accounting
//! and the on-disk model format.

mod file;
mod flops;
pub mod layers;
mod network;
mod params;
mod spec;
mod tensor;
mod train;

pub use file::{load_model, save_model, FORMAT_VERSION, MAGIC};
pub use flops::{conv_flops, count_flops, dense_flops, valid_taps, FlopsReport, LayerFlops};
pub use network::{
    forward, gradients, loss, predict_sequence, segment_gradients, ActivationVector, CarryState,
    LabeledSequence, StepProbs,
};
pub use params::{ModelParams, PARAMS_VERSION};
pub use spec::{ConvSpec, ModelSpec, SpecBuilder, DEFAULT_SE_REDUCTION};
pub use tensor::{softmax, FeatureMap, Tensor};
pub use train::{train, train_from, TrainConfig};
