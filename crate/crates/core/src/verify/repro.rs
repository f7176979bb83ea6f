use super::replay::{segment_distance, segments};
use super::Metric;
use crate::error::Result;
use crate::proof::PoLProof;
use crate::sgd::{initial_weights, Dataset, Hyperparams, ModelArch, NoiseModel, TrainSpec};

/// `d(W'_{t+k}, W_{t+k})` for every segment, where `W'` is the noiseless
/// re-execution from the recorded `W_t`. Pairs are `(t, distance)`.
pub fn reproduction_errors(
    proof: &PoLProof,
    dataset: &Dataset,
    metric: Metric,
) -> Result<Vec<(usize, f64)>> {
    proof.validate()?;
    let arch = proof.meta.arch()?;
    segments(proof)
        .into_iter()
        .map(|seg| {
            Ok((
                seg.start,
                segment_distance(&arch, proof, dataset, seg, metric)?,
            ))
        })
        .collect()
}

/// Largest reproduction error over all segments.
pub fn epsilon_repr(proof: &PoLProof, dataset: &Dataset, metric: Metric) -> Result<f64> {
    Ok(reproduction_errors(proof, dataset, metric)?
        .into_iter()
        .map(|(_, d)| d)
        .fold(0.0, f64::max))
}

/// Distance between two models trained to completion from independent
/// initializations and batch orders (`hyper_a.seed != hyper_b.seed`).
pub fn reference_distance(
    arch: &ModelArch,
    dataset: &Dataset,
    hyper_a: &Hyperparams,
    hyper_b: &Hyperparams,
    epochs: usize,
    metric: Metric,
) -> Result<f64> {
    let train = |hyper: &Hyperparams| {
        TrainSpec {
            arch,
            dataset,
            hyper,
            epochs,
            noise: NoiseModel::None,
            noise_seed: 0,
        }
        .train(initial_weights(arch, hyper))
    };
    let a = train(hyper_a)?;
    let b = train(hyper_b)?;
    Ok(metric.distance(a.values(), b.values()))
}
