use super::{hash_batch, InitOrigin, PoLProof, Precision, ProofMeta};
use crate::error::{Error, Result};
use crate::sgd::{
    initial_weights, Dataset, Hyperparams, ModelArch, NoiseModel, StepCtx, TrainSpec,
    WeightVector,
};

/// Where training starts.
#[derive(Debug, Clone)]
pub enum StartState {
    /// Draw W_0 from `hyper.init_strategy`.
    Fresh,
    /// Continue from the final weights of the proof with this content hash.
    Warm {
        weights: WeightVector,
        prior_hash: [u8; 32],
    },
}

/// Transcript-level knobs that do not change the SGD updates themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProveParams {
    pub epochs: usize,
    /// Checkpoint interval.
    pub k: usize,
    pub noise: NoiseModel,
    pub noise_seed: u64,
    pub precision: Precision,
}

#[derive(Debug, Clone)]
pub struct ProveOutput {
    pub proof: PoLProof,
    pub final_weights: WeightVector,
    /// Gradient evaluations spent (one per step).
    pub grad_evals: usize,
}

/// Trains while logging a proof. Stored checkpoints are rounded to
/// `params.precision` and training continues from the rounded state, so an
/// honest noiseless transcript replays bit-for-bit.
pub fn create_pol(
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &ProveParams,
    start: StartState,
) -> Result<ProveOutput> {
    create_pol_with_hook(arch, dataset, hyper, params, start, |_| Ok(()))
}

/// [`create_pol`] with a callback that sees (and may overwrite) the state
/// before step `t` is logged and applied. Used to build dishonest transcripts.
pub fn create_pol_with_hook<F>(
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &ProveParams,
    start: StartState,
    mut hook: F,
) -> Result<ProveOutput>
where
    F: FnMut(&mut StepCtx<'_>) -> Result<()>,
{
    if params.k == 0 {
        return Err(Error::InvalidConfig(
            "checkpoint interval k must be >= 1".into(),
        ));
    }
    let spec = TrainSpec {
        arch,
        dataset,
        hyper,
        epochs: params.epochs,
        noise: params.noise,
        noise_seed: params.noise_seed,
    };
    spec.validate()?;
    let (w0, origin) = match start {
        StartState::Fresh => (
            initial_weights(arch, hyper),
            InitOrigin::Claim {
                strategy: hyper.init_strategy.name().to_owned(),
            },
        ),
        StartState::Warm {
            weights,
            prior_hash,
        } => (
            weights,
            InitOrigin::Prior {
                proof_hash: prior_hash,
            },
        ),
    };
    let total = spec.total_steps();
    let precision = params.precision;
    let mut step_etas = Vec::with_capacity(total);
    let mut indices = Vec::with_capacity(total);
    let mut hashes = Vec::with_capacity(total);
    let mut checkpoints = Vec::with_capacity(total);
    let mut final_weights = spec.run(w0, |mut ctx| {
        hook(&mut ctx)?;
        if ctx.t % params.k == 0 {
            precision.round_in_place(ctx.weights.values_mut());
            checkpoints.push(Some(ctx.weights.clone()));
        } else {
            checkpoints.push(None);
        }
        step_etas.push(*ctx.eta);
        indices.push(ctx.indices.to_vec());
        hashes.push(hash_batch(dataset, ctx.indices)?);
        Ok(())
    })?;
    precision.round_in_place(final_weights.values_mut());
    let proof = PoLProof {
        meta: ProofMeta {
            layer_dims: arch.layer_dims().to_vec(),
            activations: arch.activations().to_vec(),
            loss_tag: arch.loss().name().to_owned(),
            optimizer_tag: hyper.optimizer.name().to_owned(),
            origin,
            epochs: params.epochs,
            steps_per_epoch: spec.steps_per_epoch(),
            k: params.k,
            noise_sigma: params.noise.sigma(),
            dataset_size: dataset.len(),
            precision,
        },
        step_etas,
        indices,
        hashes,
        checkpoints,
        final_weights: final_weights.clone(),
    };
    Ok(ProveOutput {
        proof,
        final_weights,
        grad_evals: total,
    })
}
