use rand::SeedableRng;

use super::{
    get_batches, init_weights, sgd_step, sub_seed, Dataset, Hyperparams, ModelArch, NoiseModel,
    NoiseRng, WeightVector,
};
use crate::error::{Error, Result};

const INIT_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;

/// Seed used by `init_weights` for a run with these hyperparameters.
pub fn init_seed(hyper: &Hyperparams) -> u64 {
    sub_seed(hyper.seed, INIT_STREAM, 0)
}

/// Seed of epoch `epoch`'s batch schedule.
pub fn epoch_seed(hyper: &Hyperparams, epoch: usize) -> u64 {
    sub_seed(hyper.seed, BATCH_STREAM, epoch as u64)
}

/// Fresh initialization for a run.
pub fn initial_weights(arch: &ModelArch, hyper: &Hyperparams) -> WeightVector {
    init_weights(arch, hyper.init_strategy, init_seed(hyper))
}

/// Everything that defines an SGD run apart from its starting point.
#[derive(Debug, Clone)]
pub struct TrainSpec<'a> {
    pub arch: &'a ModelArch,
    pub dataset: &'a Dataset,
    pub hyper: &'a Hyperparams,
    pub epochs: usize,
    pub noise: NoiseModel,
    pub noise_seed: u64,
}

/// What a step callback sees: the global step, its batch, and the learning
/// rate and state about to be used (both of which it may replace).
pub struct StepCtx<'a> {
    pub t: usize,
    pub epoch: usize,
    pub indices: &'a [usize],
    pub eta: &'a mut f64,
    pub weights: &'a mut WeightVector,
}

impl TrainSpec<'_> {
    pub fn steps_per_epoch(&self) -> usize {
        self.dataset.len().div_ceil(self.hyper.batch_size)
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch()
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate(self.dataset.len())?;
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.dataset.dim() != self.arch.input_dim() {
            return Err(Error::Shape(format!(
                "dataset width {} does not match input dim {}",
                self.dataset.dim(),
                self.arch.input_dim()
            )));
        }
        Ok(())
    }

    /// Runs `epochs * S` SGD steps from `start`, calling `on_step` before each
    /// update. Returns the final state.
    pub fn run<F>(&self, start: WeightVector, mut on_step: F) -> Result<WeightVector>
    where
        F: FnMut(StepCtx<'_>) -> Result<()>,
    {
        self.validate()?;
        if !start.matches(self.arch) {
            return Err(Error::Shape(
                "initial weights do not match architecture".into(),
            ));
        }
        let s_per_epoch = self.steps_per_epoch();
        let mut rng = NoiseRng::seed_from_u64(self.noise_seed);
        let mut w = start;
        for epoch in 0..self.epochs {
            let schedule = get_batches(
                self.dataset.len(),
                self.hyper.batch_size,
                epoch_seed(self.hyper, epoch),
            )?;
            for (s, indices) in schedule.iter().enumerate() {
                let t = epoch * s_per_epoch + s;
                let mut eta = self.hyper.eta_at(t);
                on_step(StepCtx {
                    t,
                    epoch,
                    indices,
                    eta: &mut eta,
                    weights: &mut w,
                })?;
                let batch = self.dataset.select(indices)?;
                w = sgd_step(self.arch, &w, &batch, eta, &self.noise, &mut rng)?;
            }
        }
        Ok(w)
    }

    pub fn train(&self, start: WeightVector) -> Result<WeightVector> {
        self.run(start, |_| Ok(()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgd::{
        accuracy, loss, make_synthetic_dataset, Activation, InitStrategy, LossKind, SyntheticKind,
    };

    fn setup() -> (ModelArch, Dataset, Hyperparams) {
        let arch =
            ModelArch::mlp(&[2, 16, 2], Activation::Relu, LossKind::CrossEntropySoftmax).unwrap();
        let ds = make_synthetic_dataset(SyntheticKind::blobs(), 200, 2, 2, 3).unwrap();
        let hyper = Hyperparams::new(0.1, 20, InitStrategy::XavierUniform, 17);
        (arch, ds, hyper)
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (arch, ds, hyper) = setup();
        let spec = TrainSpec {
            arch: &arch,
            dataset: &ds,
            hyper: &hyper,
            epochs: 20,
            noise: NoiseModel::None,
            noise_seed: 0,
        };
        assert_eq!(spec.total_steps(), 200);
        let w = spec.train(initial_weights(&arch, &hyper)).unwrap();
        assert!(accuracy(&arch, &w, &ds.all()) >= 0.95);
    }

    #[test]
    fn noiseless_runs_are_bit_identical() {
        let (arch, ds, hyper) = setup();
        let spec = TrainSpec {
            arch: &arch,
            dataset: &ds,
            hyper: &hyper,
            epochs: 3,
            noise: NoiseModel::None,
            noise_seed: 0,
        };
        let trajectory = || {
            let mut states = Vec::new();
            let last = spec
                .run(initial_weights(&arch, &hyper), |ctx| {
                    states.push(ctx.weights.clone());
                    Ok(())
                })
                .unwrap();
            states.push(last);
            states
        };
        let a = trajectory();
        let b = trajectory();
        assert_eq!(a.len(), 31);
        assert!(a.iter().zip(&b).all(|(x, y)| x.values() == y.values()));
    }

    #[test]
    fn epoch_loss_non_increasing_early() {
        let (arch, ds, mut hyper) = setup();
        hyper.eta = 0.02;
        let mut w = initial_weights(&arch, &hyper);
        let mut prev = f64::INFINITY;
        for e in 0..5 {
            let h = Hyperparams {
                seed: hyper.seed + e,
                ..hyper.clone()
            };
            let spec = TrainSpec {
                arch: &arch,
                dataset: &ds,
                hyper: &h,
                epochs: 1,
                noise: NoiseModel::None,
                noise_seed: 0,
            };
            let mut sum = 0.0;
            let mut count = 0.0;
            w = spec
                .run(w, |ctx| {
                    sum += loss(&arch, ctx.weights, &ds.select(ctx.indices)?)?;
                    count += 1.0;
                    Ok(())
                })
                .unwrap();
            let avg = sum / count;
            assert!(avg <= prev, "epoch {e}: {avg} > {prev}");
            prev = avg;
        }
    }
}
