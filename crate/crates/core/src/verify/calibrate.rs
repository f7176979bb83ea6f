use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::replay::{segment_distance, segments};
use super::Metric;
use crate::error::{Error, Result};
use crate::proof::PoLProof;
use crate::sgd::Dataset;

pub const DEFAULT_PROBES: usize = 10;
pub const DEFAULT_SAFETY_FACTOR: f64 = 3.0;

/// Outcome of estimating the slack `delta` from a proof's own segments.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCalibration {
    pub probes: Vec<(usize, f64)>,
    pub mean: f64,
    /// `mean * safety_factor`; zero for a noiseless proof.
    pub raw: f64,
    /// Lower bound from storage rounding (see [`delta_floor`]).
    pub floor: f64,
    /// Gradient evaluations spent on probing.
    pub steps: usize,
}

impl DeltaCalibration {
    /// Threshold to verify with: the calibrated value, never below the floor.
    pub fn delta(&self) -> f64 {
        self.raw.max(self.floor)
    }
}

/// Smallest sensible `delta`: one rounding unit of the storage precision,
/// scaled by the size of `W_0` in `metric`.
pub fn delta_floor(proof: &PoLProof, metric: Metric) -> f64 {
    let scale = proof
        .initial_weights()
        .map_or(1.0, |w| metric.scale(w.values()).max(f64::MIN_POSITIVE));
    proof.meta.precision.epsilon() * scale
}

/// Re-executes `n_probe` randomly chosen segments and returns their mean
/// `d2` distance times `safety_factor`.
pub fn calibrate_delta(
    proof: &PoLProof,
    dataset: &Dataset,
    metric: Metric,
    n_probe: usize,
    safety_factor: f64,
    seed: u64,
) -> Result<DeltaCalibration> {
    if n_probe == 0 {
        return Err(Error::InvalidConfig(
            "need at least one probe segment".into(),
        ));
    }
    if !(safety_factor.is_finite() && safety_factor > 0.0) {
        return Err(Error::InvalidConfig("safety factor must be > 0".into()));
    }
    proof.validate()?;
    let arch = proof.meta.arch()?;
    let segs = segments(proof);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, segs.len(), n_probe.min(segs.len())).into_vec();
    picked.sort_unstable();
    let mut probes = Vec::with_capacity(picked.len());
    let mut steps = 0;
    for i in picked {
        let seg = segs[i];
        probes.push((
            seg.start,
            segment_distance(&arch, proof, dataset, seg, metric)?,
        ));
        steps += seg.len();
    }
    let mean = probes.iter().map(|p| p.1).sum::<f64>() / probes.len() as f64;
    Ok(DeltaCalibration {
        probes,
        mean,
        raw: mean * safety_factor,
        floor: delta_floor(proof, metric),
        steps,
    })
}
