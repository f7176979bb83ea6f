//! Attacks that try to pass verification without doing the training, with
//! their cost and detection diagnostics.

mod concat;
mod inverse;
mod regularizer;
mod report;
mod retrain;

pub use concat::{concat_spoof, random_sampling_detection, ConcatParams, Decoys};
pub use inverse::{inverse_gradient_spoof, inverse_step, InverseParams, InverseStep, Solver};
pub use regularizer::{
    directed_regularizer_demo, regularizer_input_gradient, target_regularizer, REGULARIZER_TAG,
};
pub use report::{Attack, AttackCost, Outcome, Series, SpoofReport};
pub use retrain::retrain_spoof;

use crate::sgd::Dataset;
use crate::verify::VerificationConfig;

/// What an attack's output is judged against.
#[derive(Debug, Clone, Copy)]
pub struct Judge<'a> {
    pub dataset: &'a Dataset,
    pub config: &'a VerificationConfig,
    /// Reference distance used to normalize reported distances.
    pub d_ref: f64,
}
