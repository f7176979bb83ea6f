//! Minimal dense-MLP training engine.
//!
//! Everything here is a pure function over value types: initialization,
//! batched gradients via backpropagation, plain SGD steps with an optional
//! injected noise term standing in for hardware nondeterminism, seeded batch
//! schedules and small synthetic datasets.

mod arch;
mod batch;
mod data;
mod init;
mod mlp;
mod step;
mod train;

pub use arch::{layout_for_dims, Activation, LayerSlice, LossKind, ModelArch, WeightVector};
pub use batch::{get_batches, sub_seed, BatchSchedule};
pub use data::{make_synthetic_dataset, Batch, Dataset, Labels, SyntheticKind};
pub use init::{init_weights, InitDistribution, InitStrategy};
pub use mlp::{accuracy, grad, loss, predict};
pub use step::{sgd_step, Hyperparams, LrSchedule, NoiseModel, NoiseRng, OptimizerKind};
pub use train::{epoch_seed, init_seed, initial_weights, StepCtx, TrainSpec};
