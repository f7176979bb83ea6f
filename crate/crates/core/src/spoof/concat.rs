use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{Attack, Judge, Outcome, SpoofReport};
use crate::error::{Error, Result};
use crate::proof::{create_pol_with_hook, PoLProof, ProveParams, StartState};
use crate::sgd::{Dataset, Hyperparams, ModelArch, WeightVector};
use crate::verify::{
    segment_distance, segments, top_q_by_epoch, update_magnitude, verify_proof, Metric,
    VerifyContext, VsrEstimate,
};

/// Huge-learning-rate updates planted so that they, and not the
/// discontinuity, rank first in their epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoys {
    pub per_epoch: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcatParams {
    /// Steps of fresh training before the stolen weights are spliced in.
    pub fresh_steps: usize,
    pub fine_tune_epochs: usize,
    /// Checkpoint interval, noise and precision of the forged run.
    pub prove: ProveParams,
    pub decoys: Option<Decoys>,
}

/// Trains a fresh model for `fresh_steps`, then swaps in `stolen` and
/// fine-tunes it, logging a single proof across the swap.
///
/// The proof covers `ceil(fresh_steps / S) + fine_tune_epochs` epochs;
/// `params.prove.epochs` is ignored.
pub fn concat_spoof(
    stolen: &WeightVector,
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &ConcatParams,
    judge: &Judge<'_>,
) -> Result<(PoLProof, SpoofReport)> {
    if params.fine_tune_epochs == 0 {
        return Err(Error::InvalidConfig("fine_tune_epochs must be >= 1".into()));
    }
    if !stolen.matches(arch) {
        return Err(Error::Shape("stolen weights do not match architecture".into()));
    }
    let s = dataset.len().div_ceil(hyper.batch_size.max(1));
    let k = params.prove.k;
    let jump = params.fresh_steps;
    let prove = ProveParams {
        epochs: jump.div_ceil(s) + params.fine_tune_epochs,
        ..params.prove
    };
    // Segment whose replay crosses the swap.
    let jump_start = (jump > 0).then(|| (jump - 1) / k.max(1) * k);
    let mut before_swap: Option<WeightVector> = None;
    let out = create_pol_with_hook(arch, dataset, hyper, &prove, StartState::Fresh, |ctx| {
        if ctx.t == jump {
            before_swap = Some(ctx.weights.clone());
            *ctx.weights = stolen.clone();
        }
        if let Some(d) = params.decoys {
            let in_epoch = ctx.t % s;
            let seg_start = ctx.t / k * k;
            if ctx.t % k == 0 && in_epoch < d.per_epoch * k && Some(seg_start) != jump_start {
                *ctx.eta = d.eta;
            }
        }
        Ok(())
    })?;
    let proof = out.proof;
    let fresh = before_swap.expect("swap step lies inside the run");

    let mut report = SpoofReport::new(Attack::Concat);
    report.cost.add_grad_evals(out.grad_evals);
    report.cost.add_steps(proof.total_steps());

    let d1 = judge.config.d1;
    let stored_stolen = proof
        .state_at(jump)
        .filter(|_| jump % k == 0)
        .cloned()
        .unwrap_or_else(|| stolen.clone());
    let disc = d1.distance(stored_stolen.values(), fresh.values());
    let segs = segments(&proof);
    let mut mags = Vec::with_capacity(segs.len());
    for &seg in &segs {
        mags.push((seg.start, update_magnitude(&proof, seg, d1)?));
    }
    let max_valid = mags
        .iter()
        .filter(|m| Some(m.0) != jump_start)
        .map(|m| m.1)
        .fold(0.0, f64::max);
    report.set_metric("d_ref", judge.d_ref);
    report.set_metric("discontinuity", disc);
    report.set_metric("discontinuity_normalized", disc / judge.d_ref);
    report.set_metric("max_valid_update", max_valid);
    report.set_metric("max_valid_update_normalized", max_valid / judge.d_ref);
    if let Some(js) = jump_start {
        let epoch = js / s;
        let ranked = top_q_by_epoch(&mags, s, proof.meta.epochs, 1);
        let top = ranked[epoch].first().map(|&i| mags[i].0);
        report.set_metric("jump_segment_start", js as f64);
        report.set_metric("jump_epoch", epoch as f64);
        if let Some(top) = top {
            report.set_metric("epoch_argmax_start", top as f64);
        }
    }
    report.push_series("update_magnitude", mags);

    let res = verify_proof(&proof, judge.dataset, judge.config, VerifyContext::default())?;
    report.outcomes.push(Outcome::from_result("proof", &res));
    if let Some(d) = res.delta {
        report.set_metric("delta", d);
    }
    Ok((proof, report))
}

/// Ablation: instead of the top-Q rule, re-execute one uniformly chosen
/// segment per epoch. Every segment's distance is computed once; each trial
/// then draws a fresh selection and counts as a detection if any selected
/// segment exceeds `delta`.
pub fn random_sampling_detection(
    proof: &PoLProof,
    dataset: &Dataset,
    delta: f64,
    metric: Metric,
    trials: usize,
    seed: u64,
) -> Result<VsrEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    proof.validate()?;
    let arch = proof.meta.arch()?;
    let m = &proof.meta;
    let mut by_epoch: Vec<Vec<bool>> = vec![Vec::new(); m.epochs];
    for seg in segments(proof) {
        let d = segment_distance(&arch, proof, dataset, seg, metric)?;
        let epoch = (seg.start / m.steps_per_epoch).min(m.epochs - 1);
        by_epoch[epoch].push(!(d <= delta));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let detections = (0..trials)
        .filter(|_| {
            by_epoch
                .iter()
                .filter(|v| !v.is_empty())
                .any(|v| v[rng.gen_range(0..v.len())])
        })
        .count();
    Ok(VsrEstimate::from_counts(detections, trials))
}
