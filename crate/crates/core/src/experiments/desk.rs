use crate::error::Result;
use crate::proof::{create_pol, Precision, ProveOutput, ProveParams, StartState};
use crate::sgd::{
    initial_weights, make_synthetic_dataset, sub_seed, Activation, Dataset, Hyperparams,
    InitStrategy, LossKind, ModelArch, NoiseModel, SyntheticKind,
};
use crate::verify::{reference_distance, Metric, ProverSetup};

/// Seed stream for the second model of a reference-distance pair.
const REFERENCE_STREAM: u64 = 0x0072_6566;
const NOISE_STREAM: u64 = 0x6e6f_6973;

/// Laptop-sized default experiment.
///
/// The injected noise is given relative to `RMS(W_0)`. At this scale SGD
/// settles into a flat region within a few epochs, after which independent
/// noise draws separate two runs only like a random walk. `5e-2` is the
/// level at which a full-run replay lands near `d_ref` while a single step
/// stays a few percent of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskConfig {
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
    pub data: SyntheticKind,
    pub n: usize,
    pub classes: usize,
    pub data_seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub eta: f64,
    pub init: InitStrategy,
    pub k: usize,
    pub noise_rel: f64,
    pub precision: Precision,
}

impl Default for DeskConfig {
    fn default() -> Self {
        Self {
            layer_dims: vec![16, 64, 64, 4],
            activation: Activation::Relu,
            loss: LossKind::CrossEntropySoftmax,
            data: SyntheticKind::blobs(),
            n: 2000,
            classes: 4,
            data_seed: 1,
            batch_size: 100,
            epochs: 20,
            eta: 0.1,
            init: InitStrategy::KaimingUniform,
            k: 5,
            noise_rel: 5e-2,
            precision: Precision::F32,
        }
    }
}

impl DeskConfig {
    pub fn build(&self) -> Result<Desk> {
        let hidden = self.layer_dims.len().saturating_sub(2);
        let arch = ModelArch::new(
            self.layer_dims.clone(),
            vec![self.activation; hidden],
            self.loss,
        )?;
        let dataset = make_synthetic_dataset(
            self.data,
            self.n,
            arch.input_dim(),
            self.classes,
            self.data_seed,
        )?;
        Ok(Desk {
            cfg: self.clone(),
            arch,
            dataset,
        })
    }
}

/// A built [`DeskConfig`]: the architecture and dataset every run shares.
#[derive(Debug, Clone)]
pub struct Desk {
    pub cfg: DeskConfig,
    pub arch: ModelArch,
    pub dataset: Dataset,
}

impl Desk {
    pub fn steps_per_epoch(&self) -> usize {
        self.dataset.len().div_ceil(self.cfg.batch_size)
    }

    pub fn total_steps(&self) -> usize {
        self.cfg.epochs * self.steps_per_epoch()
    }

    pub fn hyper(&self, seed: u64) -> Hyperparams {
        Hyperparams::new(self.cfg.eta, self.cfg.batch_size, self.cfg.init, seed)
    }

    /// Absolute noise level for a run: `noise_rel * RMS(W_0)`.
    pub fn sigma(&self, hyper: &Hyperparams) -> f64 {
        self.cfg.noise_rel * initial_weights(&self.arch, hyper).rms()
    }

    pub fn prove_params(&self, hyper: &Hyperparams, k: usize) -> Result<ProveParams> {
        Ok(ProveParams {
            epochs: self.cfg.epochs,
            k,
            noise: NoiseModel::from_sigma(self.sigma(hyper))?,
            noise_seed: sub_seed(hyper.seed, NOISE_STREAM, 0),
            precision: self.cfg.precision,
        })
    }

    /// Honest proof for run `seed` with checkpoint interval `k`.
    pub fn prove(&self, seed: u64, k: usize) -> Result<ProveOutput> {
        let hyper = self.hyper(seed);
        let params = self.prove_params(&hyper, k)?;
        create_pol(&self.arch, &self.dataset, &hyper, &params, StartState::Fresh)
    }

    pub fn prover_setup(&self, seed: u64) -> Result<ProverSetup<'_>> {
        let hyper = self.hyper(seed);
        let params = self.prove_params(&hyper, self.cfg.k)?;
        Ok(ProverSetup {
            arch: &self.arch,
            dataset: &self.dataset,
            hyper,
            params,
        })
    }

    /// Distance between the noiseless models of run `seed` and an
    /// independent partner run.
    pub fn reference_distance(&self, seed: u64, metric: Metric) -> Result<f64> {
        self.reference_distance_for(&self.hyper(seed), metric)
    }

    pub fn reference_distance_for(&self, hyper: &Hyperparams, metric: Metric) -> Result<f64> {
        let mut partner = hyper.clone();
        partner.seed = sub_seed(hyper.seed, REFERENCE_STREAM, 0);
        reference_distance(
            &self.arch,
            &self.dataset,
            hyper,
            &partner,
            self.cfg.epochs,
            metric,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scale() {
        let desk = DeskConfig::default().build().unwrap();
        assert!(desk.arch.param_count() <= 10_000);
        assert_eq!(desk.dataset.len(), 2000);
        assert_eq!(desk.steps_per_epoch(), 20);
        assert_eq!(desk.total_steps(), 400);
        let h = desk.hyper(3);
        let s = desk.sigma(&h);
        assert!(s > 0.0);
        assert_eq!(desk.prove_params(&h, 5).unwrap().noise.sigma(), s);
    }
}
