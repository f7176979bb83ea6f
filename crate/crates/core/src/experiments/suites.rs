use super::table::{opt, CsvRow};
use super::Desk;
use crate::error::{Error, Result};
use crate::proof::{encode_proof, proof_size_bytes};
use crate::sgd::{initial_weights, TrainSpec};
use crate::verify::{epsilon_repr, verification_cost, verify_initialization, Metric};

/// `{1, S/4, S, 4S, E*S}` without duplicates, ascending.
pub fn default_k_grid(steps_per_epoch: usize, epochs: usize) -> Vec<usize> {
    let s = steps_per_epoch;
    let mut ks: Vec<usize> = [1, s / 4, s, 4 * s, epochs * s]
        .into_iter()
        .filter(|&k| k >= 1 && k <= epochs * s)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproRow {
    pub k: usize,
    pub eta: f64,
    pub seed: u64,
    pub d_ref: f64,
    pub eps_repr: f64,
    pub normalized: f64,
}

impl CsvRow for ReproRow {
    const HEADER: &'static [&'static str] = &["k", "eta", "seed", "d_ref", "eps_repr", "normalized"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.eta.to_string(),
            self.seed.to_string(),
            self.d_ref.to_string(),
            self.eps_repr.to_string(),
            self.normalized.to_string(),
        ]
    }
}

fn repro_rows(desk: &Desk, ks: &[usize], seeds: &[u64], metric: Metric) -> Result<Vec<ReproRow>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let d_ref = desk.reference_distance(seed, metric)?;
        for &k in ks {
            let out = desk.prove(seed, k)?;
            let eps = epsilon_repr(&out.proof, &desk.dataset, metric)?;
            rows.push(ReproRow {
                k,
                eta: desk.cfg.eta,
                seed,
                d_ref,
                eps_repr: eps,
                normalized: eps / d_ref,
            });
        }
    }
    Ok(rows)
}

/// Normalized reproduction error of honest noisy proofs for each `k`.
pub fn k_sweep(desk: &Desk, ks: &[usize], seeds: &[u64], metric: Metric) -> Result<Vec<ReproRow>> {
    repro_rows(desk, ks, seeds, metric)
}

/// Normalized reproduction error at a fixed `k` for each learning rate.
pub fn lr_sweep(
    desk: &Desk,
    etas: &[f64],
    k: usize,
    seeds: &[u64],
    metric: Metric,
) -> Result<Vec<ReproRow>> {
    let mut rows = Vec::new();
    for &eta in etas {
        let mut d = desk.clone();
        d.cfg.eta = eta;
        rows.extend(repro_rows(&d, &[k], seeds, metric)?);
    }
    Ok(rows)
}

/// Mean of `normalized` over rows whose key matches.
pub fn mean_normalized<F: Fn(&ReproRow) -> bool>(rows: &[ReproRow], select: F) -> f64 {
    let picked: Vec<f64> = rows
        .iter()
        .filter(|r| select(r))
        .map(|r| r.normalized)
        .collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsStepRow {
    pub seed: u64,
    pub step: usize,
    pub min_p_value: f64,
    pub pass: bool,
}

impl CsvRow for KsStepRow {
    const HEADER: &'static [&'static str] = &["seed", "step", "min_p_value", "pass"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.step.to_string(),
            self.min_p_value.to_string(),
            self.pass.to_string(),
        ]
    }
}

/// KS check of the claimed init on the weights after `0..=max_steps` noisy
/// SGD steps of each seed's run.
pub fn ks_steps(
    desk: &Desk,
    seeds: &[u64],
    max_steps: usize,
    alpha: f64,
    bonferroni: bool,
) -> Result<Vec<KsStepRow>> {
    let s = desk.steps_per_epoch();
    let mut rows = Vec::new();
    for &seed in seeds {
        let hyper = desk.hyper(seed);
        let params = desk.prove_params(&hyper, 1)?;
        let spec = TrainSpec {
            arch: &desk.arch,
            dataset: &desk.dataset,
            hyper: &hyper,
            epochs: (max_steps + 1).div_ceil(s),
            noise: params.noise,
            noise_seed: params.noise_seed,
        };
        spec.run(initial_weights(&desk.arch, &hyper), |ctx| {
            if ctx.t <= max_steps {
                let check = verify_initialization(ctx.weights, hyper.init_strategy, alpha, bonferroni)?;
                rows.push(KsStepRow {
                    seed,
                    step: ctx.t,
                    min_p_value: check.min_p_value(),
                    pass: check.pass,
                });
            }
            Ok(())
        })?;
    }
    Ok(rows)
}

/// Per seed, the first step whose weights fail the KS check.
pub fn first_failing_steps(rows: &[KsStepRow]) -> Vec<(u64, Option<usize>)> {
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.dedup();
    seeds
        .into_iter()
        .map(|seed| {
            let n = rows
                .iter()
                .filter(|r| r.seed == seed && !r.pass)
                .map(|r| r.step)
                .min();
            (seed, n)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRow {
    pub q: usize,
    pub k: usize,
    pub steps_per_epoch: usize,
    pub epochs: usize,
    pub recomputed_steps: usize,
    pub ratio: f64,
    pub expected_transfer: f64,
}

impl CsvRow for CostRow {
    const HEADER: &'static [&'static str] = &[
        "q",
        "k",
        "steps_per_epoch",
        "epochs",
        "recomputed_steps",
        "ratio",
        "expected_transfer",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.q.to_string(),
            self.k.to_string(),
            self.steps_per_epoch.to_string(),
            self.epochs.to_string(),
            self.recomputed_steps.to_string(),
            self.ratio.to_string(),
            self.expected_transfer.to_string(),
        ]
    }
}

/// Verification cost for every `(q, k)` with `q * k <= S`.
pub fn cost_curve(
    epochs: usize,
    steps_per_epoch: usize,
    ks: &[usize],
    qs: &[usize],
    dataset_size: usize,
) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();
    for &q in qs {
        for &k in ks {
            if q * k > steps_per_epoch {
                continue;
            }
            let c = verification_cost(epochs, steps_per_epoch, k, q, dataset_size)?;
            rows.push(CostRow {
                q,
                k,
                steps_per_epoch,
                epochs,
                recomputed_steps: c.recomputed_steps,
                ratio: c.ratio,
                expected_transfer: c.expected_transfer,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageRow {
    pub k: usize,
    pub checkpoints: usize,
    pub predicted_payload: u64,
    /// Measured on an encoded proof; `None` when only the formula was asked for.
    pub measured_payload: Option<u64>,
    pub file_bytes: Option<u64>,
}

impl CsvRow for StorageRow {
    const HEADER: &'static [&'static str] = &[
        "k",
        "checkpoints",
        "predicted_payload",
        "measured_payload",
        "file_bytes",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.checkpoints.to_string(),
            self.predicted_payload.to_string(),
            opt(self.measured_payload),
            opt(self.file_bytes),
        ]
    }
}

/// Checkpoint storage per `k`. With `measure`, an honest proof is built and
/// encoded for each `k` and its sizes recorded next to the formula.
pub fn storage_curve(desk: &Desk, ks: &[usize], seed: u64, measure: bool) -> Result<Vec<StorageRow>> {
    let s = desk.steps_per_epoch();
    let e = desk.cfg.epochs;
    let weight_bytes = desk.arch.param_count() * desk.cfg.precision.bytes_per_value();
    ks.iter()
        .map(|&k| {
            if k == 0 {
                return Err(Error::InvalidConfig("k must be >= 1".into()));
            }
            let mut row = StorageRow {
                k,
                checkpoints: (e * s).div_ceil(k),
                predicted_payload: proof_size_bytes(e, s, k, weight_bytes)?,
                measured_payload: None,
                file_bytes: None,
            };
            if measure {
                let enc = encode_proof(&desk.prove(seed, k)?.proof);
                row.measured_payload = Some(enc.sections.checkpoint_payload as u64);
                row.file_bytes = Some(enc.bytes.len() as u64);
            }
            Ok(row)
        })
        .collect()
}
