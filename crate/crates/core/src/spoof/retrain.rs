use super::{Attack, Judge, Outcome, SpoofReport};
use crate::error::{Error, Result};
use crate::proof::{create_pol, PoLProof, ProveParams, StartState};
use crate::sgd::{Dataset, Hyperparams, ModelArch};
use crate::verify::{verify_proof, VerifyContext};

/// Re-runs the victim's training with its seeds, init and batch order but
/// an independent noise stream (`params.noise_seed`), then submits the
/// retrained transcript with the victim's final weights in place of its own.
pub fn retrain_spoof(
    victim: &PoLProof,
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &ProveParams,
    judge: &Judge<'_>,
) -> Result<(PoLProof, SpoofReport)> {
    if params.epochs != victim.meta.epochs || params.k != victim.meta.k {
        return Err(Error::InvalidConfig(
            "retraining must use the victim's epochs and checkpoint interval".into(),
        ));
    }
    let out = create_pol(arch, dataset, hyper, params, StartState::Fresh)?;
    let mut report = SpoofReport::new(Attack::Retrain);
    report.cost.add_grad_evals(out.grad_evals);
    report.cost.add_steps(out.proof.total_steps());

    let metric = judge.config.d2;
    let mut trajectory = Vec::new();
    for t in out.proof.checkpoint_steps() {
        if let (Some(a), Some(b)) = (out.proof.state_at(t), victim.state_at(t)) {
            trajectory.push((t, metric.distance(a.values(), b.values())));
        }
    }
    let end = out.proof.total_steps();
    let final_distance = metric.distance(
        out.final_weights.values(),
        victim.final_weights.values(),
    );
    trajectory.push((end, final_distance));
    report.set_metric("d_ref", judge.d_ref);
    report.set_metric("final_distance", final_distance);
    report.set_metric("final_distance_normalized", final_distance / judge.d_ref);
    report.push_series("eps_repr", trajectory);

    let mut proof = out.proof;
    proof.final_weights = victim.final_weights.clone();
    let res = verify_proof(&proof, judge.dataset, judge.config, VerifyContext::default())?;
    report.outcomes.push(Outcome::from_result("proof", &res));
    Ok((proof, report))
}
