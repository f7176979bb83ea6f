use rand::SeedableRng;

use super::Metric;
use crate::error::{Error, Result};
use crate::proof::{hash_batch, PoLProof};
use crate::sgd::{sgd_step, Dataset, ModelArch, NoiseModel, NoiseRng, WeightVector};

/// Steps `start..end` between two recorded states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Every checkpoint-to-next-state interval of a structurally valid proof.
/// The last one ends at `T` and is compared against the final weights.
pub fn segments(proof: &PoLProof) -> Vec<Segment> {
    let t = proof.total_steps();
    proof
        .checkpoint_steps()
        .into_iter()
        .map(|start| Segment {
            start,
            end: (start + proof.meta.k).min(t),
        })
        .collect()
}

/// The first step in `seg` whose recorded batch digest does not match the
/// dataset rows.
pub fn first_hash_mismatch(
    proof: &PoLProof,
    dataset: &Dataset,
    seg: Segment,
) -> Result<Option<usize>> {
    for t in seg.start..seg.end {
        if hash_batch(dataset, &proof.indices[t])? != proof.hashes[t] {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Recomputes `seg` noiselessly from its starting checkpoint using the
/// recorded batches and learning rates, then rounds to the proof precision.
pub fn replay_segment(
    arch: &ModelArch,
    proof: &PoLProof,
    dataset: &Dataset,
    seg: Segment,
) -> Result<WeightVector> {
    let mut w = proof
        .state_at(seg.start)
        .ok_or_else(|| Error::Structural(format!("no checkpoint at step {}", seg.start)))?
        .clone();
    let mut rng = NoiseRng::seed_from_u64(0);
    for t in seg.start..seg.end {
        let batch = dataset.select(&proof.indices[t])?;
        w = sgd_step(
            arch,
            &w,
            &batch,
            proof.step_etas[t],
            &NoiseModel::None,
            &mut rng,
        )?;
    }
    proof.meta.precision.round_in_place(w.values_mut());
    Ok(w)
}

/// `d(recomputed, recorded)` at the end of `seg`.
pub fn segment_distance(
    arch: &ModelArch,
    proof: &PoLProof,
    dataset: &Dataset,
    seg: Segment,
    metric: Metric,
) -> Result<f64> {
    let replayed = replay_segment(arch, proof, dataset, seg)?;
    let recorded = proof
        .state_at(seg.end)
        .ok_or_else(|| Error::Structural(format!("no state recorded at step {}", seg.end)))?;
    Ok(metric.distance(replayed.values(), recorded.values()))
}

/// `d1` between the recorded states at both ends of `seg`.
pub fn update_magnitude(proof: &PoLProof, seg: Segment, metric: Metric) -> Result<f64> {
    let a = proof
        .state_at(seg.start)
        .ok_or_else(|| Error::Structural(format!("no checkpoint at step {}", seg.start)))?;
    let b = proof
        .state_at(seg.end)
        .ok_or_else(|| Error::Structural(format!("no state recorded at step {}", seg.end)))?;
    Ok(metric.distance(a.values(), b.values()))
}
