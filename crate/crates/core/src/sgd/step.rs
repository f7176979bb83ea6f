use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::{grad, Batch, InitStrategy, ModelArch, WeightVector};
use crate::error::{Error, Result};

/// RNG driving the injected noise term.
pub type NoiseRng = ChaCha20Rng;

/// Additive per-coordinate noise applied after every update, standing in for
/// nondeterministic low-level kernels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gaussian noise needs a positive finite sigma, got {sigma}"
            )));
        }
        Ok(NoiseModel::Gaussian { sigma })
    }

    /// `None` for sigma == 0, Gaussian otherwise.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if sigma == 0.0 {
            Ok(NoiseModel::None)
        } else {
            Self::gaussian(sigma)
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => *sigma,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseModel::None)
    }

    pub fn perturb(&self, values: &mut [f64], rng: &mut NoiseRng) {
        if let NoiseModel::Gaussian { sigma } = *self {
            let n = Normal::new(0.0, sigma).expect("validated sigma");
            values.iter_mut().for_each(|v| *v += n.sample(rng));
        }
    }
}

/// Only plain SGD is supported; the enum keeps room in the metadata format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        "sgd"
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::NotWhitelisted(other.to_owned())),
        }
    }
}

/// Learning rate as a function of the global step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// `eta * factor^(t / every)`
    StepDecay { every: usize, factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub eta: f64,
    pub batch_size: usize,
    pub init_strategy: InitStrategy,
    pub optimizer: OptimizerKind,
    pub lr_schedule: LrSchedule,
    /// Drives initialization and batch shuffling.
    pub seed: u64,
}

impl Hyperparams {
    pub fn new(eta: f64, batch_size: usize, init_strategy: InitStrategy, seed: u64) -> Self {
        Self {
            eta,
            batch_size,
            init_strategy,
            optimizer: OptimizerKind::Sgd,
            lr_schedule: LrSchedule::Constant,
            seed,
        }
    }

    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be > 0, got {}",
                self.eta
            )));
        }
        if self.batch_size == 0 || self.batch_size > dataset_len {
            return Err(Error::InvalidConfig(format!(
                "batch_size {} must be in 1..={dataset_len}",
                self.batch_size
            )));
        }
        if let LrSchedule::StepDecay { every, factor } = self.lr_schedule {
            if every == 0 || !(factor.is_finite() && factor > 0.0) {
                return Err(Error::InvalidConfig("invalid step-decay schedule".into()));
            }
        }
        Ok(())
    }

    pub fn eta_at(&self, t: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.eta,
            LrSchedule::StepDecay { every, factor } => self.eta * factor.powi((t / every) as i32),
        }
    }
}

/// `W' = W - eta * grad(W, batch) + z`, with `z` drawn from `noise`.
pub fn sgd_step(
    arch: &ModelArch,
    weights: &WeightVector,
    batch: &Batch,
    eta: f64,
    noise: &NoiseModel,
    rng: &mut NoiseRng,
) -> Result<WeightVector> {
    let g = grad(arch, weights, batch)?;
    let mut next = weights.axpy(-eta, &g);
    noise.perturb(next.values_mut(), rng);
    Ok(next)
}
