use super::{Attack, Judge, Outcome, SpoofReport};
use crate::error::{Error, Result};
use crate::proof::{create_pol_with_hook, PoLProof, ProveParams, StartState};
use crate::sgd::{Batch, Dataset, Hyperparams, ModelArch, WeightVector};
use crate::verify::{verify_proof, VerifyContext};

/// Suffix appended to the loss tag when the regularizer is declared.
pub const REGULARIZER_TAG: &str = "+l2_to_target";

/// `lambda/2 * |w - target|^2`. The batch is part of the signature only to
/// make explicit that the term never reads it.
pub fn target_regularizer(w: &[f64], target: &[f64], lambda: f64, _batch: &Batch) -> f64 {
    0.5 * lambda
        * w.iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
}

/// Largest central finite difference of [`target_regularizer`] with respect
/// to any input coordinate of `batch`.
pub fn regularizer_input_gradient(
    w: &[f64],
    target: &[f64],
    lambda: f64,
    batch: &Batch,
    h: f64,
) -> f64 {
    let mut b = batch.clone();
    let mut worst: f64 = 0.0;
    for i in 0..b.inputs.len() {
        let x = b.inputs[i];
        b.inputs[i] = x + h;
        let up = target_regularizer(w, target, lambda, &b);
        b.inputs[i] = x - h;
        let down = target_regularizer(w, target, lambda, &b);
        b.inputs[i] = x;
        worst = worst.max(((up - down) / (2.0 * h)).abs());
    }
    worst
}

/// Trains from a fresh init on `loss + lambda/2 * |W - target|^2` and
/// submits the transcript twice: once declaring only the plain loss, once
/// declaring the regularizer too.
///
/// The regularizer is applied as a decoupled pull `W -= eta*lambda*(W - target)`
/// after every gradient step but the last. `W_0` is logged untouched.
pub fn directed_regularizer_demo(
    target: &WeightVector,
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &ProveParams,
    lambda: f64,
    judge: &Judge<'_>,
) -> Result<(PoLProof, SpoofReport)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be > 0, got {lambda}")));
    }
    if !target.matches(arch) {
        return Err(Error::Shape("target does not match architecture".into()));
    }
    let out = create_pol_with_hook(arch, dataset, hyper, params, StartState::Fresh, |ctx| {
        if ctx.t == 0 {
            return Ok(());
        }
        let pull = *ctx.eta * lambda;
        for (w, t) in ctx.weights.values_mut().iter_mut().zip(target.values()) {
            *w -= pull * (*w - t);
        }
        Ok(())
    })?;
    let honest = out.proof;
    let mut declared = honest.clone();
    declared.meta.loss_tag.push_str(REGULARIZER_TAG);

    let mut report = SpoofReport::new(Attack::DirectedRegularizer);
    report.cost.add_grad_evals(out.grad_evals);
    report.cost.add_steps(honest.total_steps());
    for (label, proof) in [("honest_tag", &honest), ("true_tag", &declared)] {
        let res = verify_proof(proof, judge.dataset, judge.config, VerifyContext::default())?;
        report.outcomes.push(Outcome::from_result(label, &res));
    }
    let metric = judge.config.d2;
    let dist = metric.distance(out.final_weights.values(), target.values());
    let batch = dataset.select(&honest.indices[0])?;
    report.set_metric("lambda", lambda);
    report.set_metric("d_ref", judge.d_ref);
    report.set_metric("final_distance_to_target", dist);
    report.set_metric("final_distance_normalized", dist / judge.d_ref);
    report.set_metric(
        "regularizer_input_gradient",
        regularizer_input_gradient(out.final_weights.values(), target.values(), lambda, &batch, 1e-3),
    );
    Ok((honest, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgd::Labels;

    #[test]
    fn regularizer_value_and_input_gradient() {
        let b = Batch {
            inputs: vec![0.5, -1.0, 2.0, 3.0],
            dim: 2,
            labels: Labels::Classes {
                ids: vec![0, 1],
                num_classes: 2,
            },
        };
        assert_eq!(target_regularizer(&[1.0, 2.0], &[0.0, 0.0], 2.0, &b), 5.0);
        assert_eq!(regularizer_input_gradient(&[1.0, 2.0], &[0.5, 0.0], 3.0, &b, 1e-4), 0.0);
    }
}
