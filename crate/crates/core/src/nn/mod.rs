//! Minimal reverse-mode differentiation engine with the layers and
//! optimizers used by the generator, the critic and the classifier.

mod graph;
mod layers;
mod optim;
mod tensor;

pub use graph::{sigmoid, Graph, ParamId, Parameter, Var};
pub use layers::{
    dropout, Activation, BatchNorm1d, Conv1d, Dense, LayerSpec, Mode, BN_MOMENTUM, BN_VAR_FLOOR,
    LEAKY_SLOPE,
};
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, EPS, RMSPROP_DECAY};
pub use tensor::Tensor;
