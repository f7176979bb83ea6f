//! Proof-of-learning for small neural networks.

pub mod error;
pub mod experiments;
pub mod proof;
pub mod sgd;
pub mod spoof;
pub mod verify;

pub use error::{Error, Result};
