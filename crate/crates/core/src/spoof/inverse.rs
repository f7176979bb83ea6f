use super::{AttackCost, Attack, Judge, Outcome, SpoofReport};
use crate::error::{Error, Result};
use crate::proof::{hash_batch, InitOrigin, PoLProof, Precision, ProofMeta};
use crate::sgd::{
    epoch_seed, get_batches, grad, sgd_step, Dataset, Hyperparams, ModelArch, NoiseModel,
    NoiseRng, WeightVector,
};
use crate::verify::{verify_initialization, verify_proof, VerifyContext};
use rand::SeedableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// `W <- W_t + eta * grad(W)`.
    #[default]
    FixedPoint,
    /// Gradient descent on `|beta(W)|^2 / 2` with Hessian-vector products
    /// from finite differences of the gradient.
    ResidualDescent,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::FixedPoint => "fixed_point",
            Solver::ResidualDescent => "residual_descent",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "fixed_point" => Ok(Solver::FixedPoint),
            "residual_descent" => Ok(Solver::ResidualDescent),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseStep {
    pub candidate: Vec<f64>,
    /// Gradient evaluations spent.
    pub function_calls: usize,
    /// `max |beta(candidate)|` with `beta(W) = W - eta * grad(W) - W_t`.
    pub residual: f64,
    pub converged: bool,
}

/// Max absolute value; NaN if any entry is NaN.
fn inf_norm(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn residual_of(x: &[f64], g: &[f64], w_t: &[f64], eta: f64) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(w_t)
        .map(|((x, g), w)| x - eta * g - w)
        .collect()
}

/// Finds `W` with `W - eta * grad(W) = w_t`, i.e. the state one SGD step
/// before `w_t`. Stops once `max |beta| <= tol` or after `max_iters`
/// iterations; the best candidate seen is returned either way.
pub fn inverse_step<G>(
    w_t: &[f64],
    mut grad_fn: G,
    eta: f64,
    solver: Solver,
    tol: f64,
    max_iters: usize,
) -> Result<InverseStep>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidConfig(format!("eta must be >= 0, got {eta}")));
    }
    if max_iters == 0 || !(tol >= 0.0) {
        return Err(Error::InvalidConfig(
            "inverse step needs max_iters >= 1 and tol >= 0".into(),
        ));
    }
    match solver {
        Solver::FixedPoint => fixed_point(w_t, &mut grad_fn, eta, tol, max_iters),
        Solver::ResidualDescent => residual_descent(w_t, &mut grad_fn, eta, tol, max_iters),
    }
}

fn fixed_point<G>(w_t: &[f64], grad_fn: &mut G, eta: f64, tol: f64, max_iters: usize) -> Result<InverseStep>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = w_t.to_vec();
    let mut calls = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..max_iters {
        let g = grad_fn(&x)?;
        calls += 1;
        let next: Vec<f64> = w_t.iter().zip(&g).map(|(w, g)| w + eta * g).collect();
        // beta(x) = x - eta*g(x) - w_t = x - next
        let res = inf_norm(x.iter().zip(&next).map(|(a, b)| a - b));
        if res <= tol {
            return Ok(InverseStep {
                candidate: x,
                function_calls: calls,
                residual: res,
                converged: true,
            });
        }
        if best.as_ref().map_or(true, |b| res < b.1 || b.1.is_nan()) {
            best = Some((x, res));
        }
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        x = next;
    }
    let (candidate, residual) = best.expect("at least one iteration");
    Ok(InverseStep {
        candidate,
        function_calls: calls,
        residual,
        converged: false,
    })
}

fn residual_descent<G>(
    w_t: &[f64],
    grad_fn: &mut G,
    eta: f64,
    tol: f64,
    max_iters: usize,
) -> Result<InverseStep>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let mut x = w_t.to_vec();
    let mut g = grad_fn(&x)?;
    let mut calls = 1;
    let mut beta = residual_of(&x, &g, w_t, eta);
    let mut lr = 1.0;
    for _ in 0..max_iters {
        let res = inf_norm(beta.iter().copied());
        if res <= tol {
            return Ok(InverseStep {
                candidate: x,
                function_calls: calls,
                residual: res,
                converged: true,
            });
        }
        // H beta by a forward difference along beta.
        let scale = 1e-6 * (1.0 + inf_norm(x.iter().copied())) / res;
        let probe: Vec<f64> = x.iter().zip(&beta).map(|(x, b)| x + scale * b).collect();
        let gp = grad_fn(&probe)?;
        calls += 1;
        let dir: Vec<f64> = beta
            .iter()
            .zip(gp.iter().zip(&g))
            .map(|(b, (gp, g))| b - eta * (gp - g) / scale)
            .collect();
        let trial: Vec<f64> = x.iter().zip(&dir).map(|(x, d)| x - lr * d).collect();
        let gt = grad_fn(&trial)?;
        calls += 1;
        let bt = residual_of(&trial, &gt, w_t, eta);
        if sq(&bt) < sq(&beta) {
            x = trial;
            g = gt;
            beta = bt;
            lr = (lr * 1.5).min(1.0);
        } else {
            lr *= 0.5;
        }
    }
    let residual = inf_norm(beta.iter().copied());
    Ok(InverseStep {
        candidate: x,
        function_calls: calls,
        residual,
        converged: residual <= tol,
    })
}

/// One inverse SGD step of the model on `batch`, with fallback to residual
/// descent when the fixed-point iteration does not converge.
fn invert_model_step(
    arch: &ModelArch,
    w_t: &WeightVector,
    batch: &crate::sgd::Batch,
    eta: f64,
    params: &InverseParams,
) -> Result<InverseStep> {
    let gfn = |x: &[f64]| Ok(grad(arch, &w_t.with_values(x.to_vec()), batch)?.into_values());
    let first = inverse_step(w_t.values(), gfn, eta, params.solver, params.tol, params.max_iters)?;
    if first.converged || params.solver == Solver::ResidualDescent {
        return Ok(first);
    }
    let mut second = inverse_step(
        w_t.values(),
        gfn,
        eta,
        Solver::ResidualDescent,
        params.tol,
        params.max_iters,
    )?;
    second.function_calls += first.function_calls;
    if second.residual > first.residual {
        return Ok(InverseStep {
            function_calls: second.function_calls,
            ..first
        });
    }
    Ok(second)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseParams {
    /// Steps to run backwards; must be a whole number of epochs.
    pub steps_back: usize,
    pub k: usize,
    pub solver: Solver,
    pub tol: f64,
    pub max_iters: usize,
    pub precision: Precision,
}

impl Default for InverseParams {
    fn default() -> Self {
        Self {
            steps_back: 40,
            k: 5,
            solver: Solver::FixedPoint,
            tol: 1e-10,
            max_iters: 200,
            precision: Precision::F32,
        }
    }
}

/// Runs SGD backwards from `target` over the adversary's own batch schedule
/// (`hyper.seed`) and presents the recovered trajectory as a fresh training
/// run from `hyper.init_strategy`.
pub fn inverse_gradient_spoof(
    target: &WeightVector,
    arch: &ModelArch,
    dataset: &Dataset,
    hyper: &Hyperparams,
    params: &InverseParams,
    judge: &Judge<'_>,
) -> Result<(PoLProof, SpoofReport)> {
    hyper.validate(dataset.len())?;
    let s = dataset.len().div_ceil(hyper.batch_size);
    if params.steps_back == 0 || params.steps_back % s != 0 {
        return Err(Error::InvalidConfig(format!(
            "steps_back must be a positive multiple of the {s} steps per epoch, got {}",
            params.steps_back
        )));
    }
    if params.k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if !target.matches(arch) {
        return Err(Error::Shape("target does not match architecture".into()));
    }
    let epochs = params.steps_back / s;
    let mut indices = Vec::with_capacity(params.steps_back);
    for e in 0..epochs {
        indices.extend(get_batches(dataset.len(), hyper.batch_size, epoch_seed(hyper, e))?);
    }
    let etas: Vec<f64> = (0..params.steps_back).map(|t| hyper.eta_at(t)).collect();

    let mut report = SpoofReport::new(Attack::InverseGradient);
    let mut cost = AttackCost::default();
    let mut states = vec![target.clone(); params.steps_back + 1];
    let mut unconverged = 0;
    let mut max_residual: f64 = 0.0;
    for t in (0..params.steps_back).rev() {
        let batch = dataset.select(&indices[t])?;
        let step = invert_model_step(arch, &states[t + 1], &batch, etas[t], params)?;
        cost.add_grad_evals(step.function_calls);
        cost.add_steps(1);
        if !step.converged {
            unconverged += 1;
        }
        max_residual = max_residual.max(step.residual);
        states[t] = target.with_values(step.candidate);
    }

    let p = params.precision;
    let stored: Vec<WeightVector> = states.iter().map(|w| p.rounded(w)).collect();
    let proof = PoLProof {
        meta: ProofMeta {
            layer_dims: arch.layer_dims().to_vec(),
            activations: arch.activations().to_vec(),
            loss_tag: arch.loss().name().to_owned(),
            optimizer_tag: hyper.optimizer.name().to_owned(),
            origin: InitOrigin::Claim {
                strategy: hyper.init_strategy.name().to_owned(),
            },
            epochs,
            steps_per_epoch: s,
            k: params.k,
            noise_sigma: 0.0,
            dataset_size: dataset.len(),
            precision: p,
        },
        step_etas: etas.clone(),
        hashes: indices
            .iter()
            .map(|idx| hash_batch(dataset, idx))
            .collect::<Result<_>>()?,
        indices,
        checkpoints: (0..params.steps_back)
            .map(|t| (t % params.k == 0).then(|| stored[t].clone()))
            .collect(),
        final_weights: stored[params.steps_back].clone(),
    };

    // Forward replay of every single recovered step, as stored.
    let metric = judge.config.d2;
    let mut rng = NoiseRng::seed_from_u64(0);
    let mut eps = Vec::with_capacity(params.steps_back);
    for t in 0..params.steps_back {
        let batch = dataset.select(&proof.indices[t])?;
        let fwd = sgd_step(arch, &stored[t], &batch, etas[t], &NoiseModel::None, &mut rng)?;
        let fwd = p.rounded(&fwd);
        eps.push((t, metric.distance(fwd.values(), stored[t + 1].values())));
    }
    let init = verify_initialization(
        &stored[0],
        hyper.init_strategy,
        judge.config.alpha,
        judge.config.bonferroni,
    )?;
    let res = verify_proof(&proof, judge.dataset, judge.config, VerifyContext::default())?;

    report.outcomes.push(Outcome::from_result("proof", &res));
    report.cost = cost;
    report.set_metric("steps_back", params.steps_back as f64);
    report.set_metric(
        "cost_ratio",
        cost.grad_evals() as f64 / params.steps_back as f64,
    );
    report.set_metric("unconverged_steps", unconverged as f64);
    report.set_metric("max_residual", max_residual);
    report.set_metric("init_min_p_value", init.min_p_value());
    report.set_metric("init_threshold", init.threshold);
    report.set_metric("init_pass", if init.pass { 1.0 } else { 0.0 });
    let max_eps = eps.iter().map(|e| e.1).fold(0.0, f64::max);
    report.set_metric("eps_repr_max", max_eps);
    report.set_metric("eps_repr_mean", eps.iter().map(|e| e.1).sum::<f64>() / eps.len() as f64);
    report.set_metric("d_ref", judge.d_ref);
    report.push_series("eps_repr", eps);
    report.push_series(
        "init_p_value",
        init.layers.iter().map(|r| r.p_value).enumerate().collect(),
    );
    Ok((proof, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_inverse() {
        // L = w^2/2, forward w' = (1 - eta) w; inverting w' = 1 at eta = 0.5 gives 2.
        for solver in [Solver::FixedPoint, Solver::ResidualDescent] {
            let out = inverse_step(&[1.0], |w| Ok(w.to_vec()), 0.5, solver, 1e-12, 500).unwrap();
            assert!(out.converged, "{solver:?}");
            assert!((out.candidate[0] - 2.0).abs() < 1e-11, "{solver:?} {out:?}");
            assert!(out.residual <= 1e-12);
            assert!(out.function_calls >= 1);
        }
    }

    #[test]
    fn zero_rate_is_identity() {
        let w = [0.3, -2.0];
        let out =
            inverse_step(&w, |w| Ok(w.iter().map(|x| x * 7.0).collect()), 0.0, Solver::FixedPoint, 0.0, 10)
                .unwrap();
        assert_eq!(out.candidate, w.to_vec());
        assert_eq!(out.function_calls, 1);
        assert!(out.converged);
    }

    #[test]
    fn non_convergence_is_flagged() {
        // eta * L'' = 3 > 1: the fixed-point map is expanding.
        let out =
            inverse_step(&[1.0], |w| Ok(vec![3.0 * w[0]]), 1.0, Solver::FixedPoint, 1e-12, 20).unwrap();
        assert!(!out.converged);
        assert_eq!(out.function_calls, 20);
        assert!(out.residual > 0.0);
        // Residual descent still solves the linear problem (w' = -2 w).
        let out =
            inverse_step(&[1.0], |w| Ok(vec![3.0 * w[0]]), 1.0, Solver::ResidualDescent, 1e-12, 200)
                .unwrap();
        assert!(out.converged);
        assert!((out.candidate[0] + 0.5).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = |w: &[f64]| Ok(w.to_vec());
        assert!(inverse_step(&[1.0], g, -0.1, Solver::FixedPoint, 1e-9, 5).is_err());
        assert!(inverse_step(&[1.0], g, 0.1, Solver::FixedPoint, 1e-9, 0).is_err());
        assert_eq!(Solver::from_name("residual_descent").unwrap(), Solver::ResidualDescent);
    }
}
