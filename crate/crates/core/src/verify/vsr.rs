use super::engine::{verify_proof, VerificationConfig, VerifyContext};
use super::ledger::{weights_digest, LedgerEntry, ProofLedger};
use crate::error::{Error, Result};
use crate::proof::{create_pol, ProveParams, StartState};
use crate::sgd::{sub_seed, Dataset, Hyperparams, ModelArch};

/// Empirical acceptance rate with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsrEstimate {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl VsrEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        assert!(trials > 0 && successes <= trials);
        let z = 1.959_963_984_540_054;
        let n = trials as f64;
        let p = successes as f64 / n;
        let denom = 1.0 + z * z / n;
        let centre = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self {
            trials,
            successes,
            rate: p,
            // The bounds are exactly 0 and 1 at the extremes; avoid rounding drift.
            ci_low: if successes == 0 { 0.0 } else { centre - half },
            ci_high: if successes == trials { 1.0 } else { centre + half },
        }
    }
}

/// How the honest prover trains in each trial. Seeds are re-derived per trial.
#[derive(Debug, Clone)]
pub struct ProverSetup<'a> {
    pub arch: &'a ModelArch,
    pub dataset: &'a Dataset,
    pub hyper: Hyperparams,
    pub params: ProveParams,
}

impl ProverSetup<'_> {
    fn for_trial(&self, base_seed: u64, trial: usize, link: u64) -> (Hyperparams, ProveParams) {
        let mut hyper = self.hyper.clone();
        hyper.seed = sub_seed(base_seed, 10 + link, trial as u64);
        let mut params = self.params;
        params.noise_seed = sub_seed(base_seed, 20 + link, trial as u64);
        (hyper, params)
    }
}

/// Fraction of independent honest (prove, verify) runs that are accepted.
pub fn vsr_estimate(
    setup: &ProverSetup<'_>,
    config: &VerificationConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<VsrEstimate> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let mut ok = 0;
    for trial in 0..n_trials {
        let (hyper, params) = setup.for_trial(base_seed, trial, 0);
        let out = create_pol(
            setup.arch,
            setup.dataset,
            &hyper,
            &params,
            StartState::Fresh,
        )?;
        let mut cfg = config.clone();
        cfg.seed = sub_seed(base_seed, 30, trial as u64);
        if verify_proof(&out.proof, setup.dataset, &cfg, VerifyContext::default())?.is_success() {
            ok += 1;
        }
    }
    Ok(VsrEstimate::from_counts(ok, n_trials))
}

/// Acceptance rates for a two-link chain: the first proof alone, the
/// warm-started second proof alone (prior trusted via the ledger), and the
/// second proof verified together with its prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainVsr {
    pub first: VsrEstimate,
    pub second: VsrEstimate,
    pub chain: VsrEstimate,
}

pub fn vsr_chain_estimate(
    setup: &ProverSetup<'_>,
    config: &VerificationConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<ChainVsr> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let (mut n0, mut n1, mut nc) = (0, 0, 0);
    for trial in 0..n_trials {
        let (h0, p0) = setup.for_trial(base_seed, trial, 0);
        let first = create_pol(setup.arch, setup.dataset, &h0, &p0, StartState::Fresh)?;
        let hash0 = first.proof.content_hash();
        let (h1, p1) = setup.for_trial(base_seed, trial, 1);
        let second = create_pol(
            setup.arch,
            setup.dataset,
            &h1,
            &p1,
            StartState::Warm {
                weights: first.final_weights.clone(),
                prior_hash: hash0,
            },
        )?;
        let mut cfg = config.clone();
        cfg.seed = sub_seed(base_seed, 31, trial as u64);
        let v0 = verify_proof(&first.proof, setup.dataset, &cfg, VerifyContext::default())?;

        // Second link alone: the ledger vouches for the prior.
        let trusted = ProofLedger::new();
        trusted
            .record(
                hash0,
                LedgerEntry {
                    verified_at: 0,
                    accepted: true,
                    final_weights: weights_digest(&first.final_weights, first.proof.meta.precision),
                },
            )
            .expect("fresh ledger");
        let alone = VerifyContext {
            prior: None,
            ledger: Some(&trusted),
        };
        let v1 = verify_proof(&second.proof, setup.dataset, &cfg, alone)?;

        let chained = VerifyContext {
            prior: Some(&first.proof),
            ledger: None,
        };
        let vc = verify_proof(&second.proof, setup.dataset, &cfg, chained)?;
        n0 += usize::from(v0.is_success());
        n1 += usize::from(v1.is_success());
        nc += usize::from(vc.is_success());
    }
    Ok(ChainVsr {
        first: VsrEstimate::from_counts(n0, n_trials),
        second: VsrEstimate::from_counts(n1, n_trials),
        chain: VsrEstimate::from_counts(nc, n_trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_reference() {
        // 95% Wilson interval for 8/10: (0.4902, 0.9433).
        let e = VsrEstimate::from_counts(8, 10);
        assert!((e.ci_low - 0.4902).abs() < 1e-4, "{}", e.ci_low);
        assert!((e.ci_high - 0.9433).abs() < 1e-4, "{}", e.ci_high);
        let all = VsrEstimate::from_counts(10, 10);
        assert_eq!(all.ci_high, 1.0);
        assert!(all.ci_low < 1.0);
        let none = VsrEstimate::from_counts(0, 10);
        assert_eq!(none.ci_low, 0.0);
    }
}
