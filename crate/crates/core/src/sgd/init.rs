use libm::erf;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{ModelArch, WeightVector};
use crate::error::{Error, Result};

/// Publicly known weight-initialization strategies. Biases are always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    XavierUniform,
    XavierNormal,
    KaimingUniform,
    KaimingNormal,
}

impl InitStrategy {
    pub const ALL: [InitStrategy; 4] = [
        InitStrategy::XavierUniform,
        InitStrategy::XavierNormal,
        InitStrategy::KaimingUniform,
        InitStrategy::KaimingNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitStrategy::XavierUniform => "xavier_uniform",
            InitStrategy::XavierNormal => "xavier_normal",
            InitStrategy::KaimingUniform => "kaiming_uniform",
            InitStrategy::KaimingNormal => "kaiming_normal",
        }
    }

    /// Whitelist lookup.
    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::NotWhitelisted(name.to_owned()))
    }

    /// Per-weight distribution for a layer with the given fan-in/fan-out.
    pub fn distribution(self, fan_in: usize, fan_out: usize) -> InitDistribution {
        let (fi, fo) = (fan_in as f64, fan_out as f64);
        match self {
            InitStrategy::XavierUniform => InitDistribution::Uniform {
                bound: (6.0 / (fi + fo)).sqrt(),
            },
            InitStrategy::XavierNormal => InitDistribution::Normal {
                std: (2.0 / (fi + fo)).sqrt(),
            },
            InitStrategy::KaimingUniform => InitDistribution::Uniform {
                bound: (6.0 / fi).sqrt(),
            },
            InitStrategy::KaimingNormal => InitDistribution::Normal {
                std: (2.0 / fi).sqrt(),
            },
        }
    }
}

/// Zero-centred uniform or normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitDistribution {
    /// `U(-bound, bound)`
    Uniform { bound: f64 },
    /// `N(0, std^2)`
    Normal { std: f64 },
}

impl InitDistribution {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            InitDistribution::Uniform { bound } => ((x + bound) / (2.0 * bound)).clamp(0.0, 1.0),
            InitDistribution::Normal { std } => {
                0.5 * (1.0 + erf(x / (std * std::f64::consts::SQRT_2)))
            }
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            InitDistribution::Uniform { bound } => bound / 3f64.sqrt(),
            InitDistribution::Normal { std } => std,
        }
    }
}

/// Draws every layer's weights i.i.d. from the strategy's distribution,
/// layer by layer from one seeded stream. Deterministic in `seed`.
pub fn init_weights(arch: &ModelArch, strategy: InitStrategy, seed: u64) -> WeightVector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut w = WeightVector::zeros(arch);
    for slice in arch.layout() {
        let dist = strategy.distribution(slice.fan_in, slice.fan_out);
        let out = &mut w.values_mut()[slice.weights.clone()];
        match dist {
            InitDistribution::Uniform { bound } => {
                let u = Uniform::new_inclusive(-bound, bound);
                out.iter_mut().for_each(|v| *v = u.sample(&mut rng));
            }
            InitDistribution::Normal { std } => {
                let n = Normal::new(0.0, std).expect("std is positive");
                out.iter_mut().for_each(|v| *v = n.sample(&mut rng));
            }
        }
    }
    w
}
