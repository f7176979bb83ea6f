use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::calibrate::{calibrate_delta, DEFAULT_PROBES, DEFAULT_SAFETY_FACTOR};
use super::ks::{verify_initialization, InitCheck};
use super::ledger::{weights_digest, ProofLedger};
use super::replay::{first_hash_mismatch, segment_distance, segments, update_magnitude, Segment};
use super::Metric;
use crate::error::{Error, Result};
use crate::proof::{unseal, InitOrigin, KeyPair, PoLProof, PublicKeys, SealedProof};
use crate::sgd::{Dataset, InitStrategy, ModelArch};

/// How the segment slack is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Fixed(f64),
    /// Calibrate on the proof under verification.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationConfig {
    /// Segments re-executed per epoch, largest updates first.
    pub q: usize,
    pub delta: Delta,
    pub alpha: f64,
    pub bonferroni: bool,
    /// Metric ranking update magnitudes.
    pub d1: Metric,
    /// Metric comparing recomputed and recorded states.
    pub d2: Metric,
    /// Expected checkpoint interval; `None` accepts the proof's own.
    pub k: Option<usize>,
    /// Extra uniformly random segments per epoch on top of the top-Q.
    pub extra_random: usize,
    pub n_probe: usize,
    pub safety_factor: f64,
    /// Drives probe and extra-segment selection.
    pub seed: u64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            q: 1,
            delta: Delta::Auto,
            alpha: 0.01,
            bonferroni: true,
            d1: Metric::L2,
            d2: Metric::L2,
            k: None,
            extra_random: 0,
            n_probe: DEFAULT_PROBES,
            safety_factor: DEFAULT_SAFETY_FACTOR,
            seed: 0,
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("Q must be >= 1".into()));
        }
        if let Delta::Fixed(d) = self.delta {
            if d.is_nan() || d < 0.0 {
                return Err(Error::InvalidConfig(format!("delta must be >= 0, got {d}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.n_probe == 0 || !(self.safety_factor > 0.0) {
            return Err(Error::InvalidConfig(
                "delta calibration needs n_probe >= 1 and a positive safety factor".into(),
            ));
        }
        Ok(())
    }
}

/// Why a proof was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum FailReason {
    InitKsFail {
        layer: usize,
        statistic: f64,
        p_value: f64,
        threshold: f64,
    },
    InitProofMissing(String),
    /// A recorded batch digest does not match the dataset rows.
    SignatureMismatch {
        step: usize,
    },
    SegmentDistanceExceeded {
        start: usize,
        end: usize,
        distance: f64,
        delta: f64,
    },
    MetadataNotWhitelisted(String),
    Structural(String),
    /// The sealed envelope failed its signature check or did not decrypt.
    EnvelopeRejected(String),
}

impl FailReason {
    pub fn code(&self) -> &'static str {
        match self {
            FailReason::InitKsFail { .. } => "init_ks_fail",
            FailReason::InitProofMissing(_) => "init_proof_missing",
            FailReason::SignatureMismatch { .. } => "signature_mismatch",
            FailReason::SegmentDistanceExceeded { .. } => "segment_distance_exceeded",
            FailReason::MetadataNotWhitelisted(_) => "metadata_not_whitelisted",
            FailReason::Structural(_) => "structural",
            FailReason::EnvelopeRejected(_) => "envelope_rejected",
        }
    }

    /// Problems with the artifact itself rather than with the training it claims.
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            FailReason::Structural(_) | FailReason::EnvelopeRejected(_)
        )
    }
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            FailReason::InitKsFail {
                layer,
                statistic,
                p_value,
                threshold,
            } => write!(
                f,
                "layer {layer} D={statistic:.6} p={p_value:.3e} below {threshold:.3e}"
            ),
            FailReason::SignatureMismatch { step } => {
                write!(f, "batch digest differs at step {step}")
            }
            FailReason::SegmentDistanceExceeded {
                start,
                end,
                distance,
                delta,
            } => write!(
                f,
                "steps {start}..{end} distance {distance:.6e} > delta {delta:.6e}"
            ),
            FailReason::InitProofMissing(m)
            | FailReason::MetadataNotWhitelisted(m)
            | FailReason::Structural(m)
            | FailReason::EnvelopeRejected(m) => f.write_str(m),
        }
    }
}

/// One re-executed segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCheck {
    pub epoch: usize,
    /// Position in the epoch's magnitude ranking (0 = largest); `None` for
    /// segments checked for another reason (final partial, extra random).
    pub rank: Option<usize>,
    pub start: usize,
    pub end: usize,
    pub magnitude: f64,
    /// `None` when the segment failed before re-execution (digest mismatch).
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationResult {
    pub reason: Option<FailReason>,
    pub proof_hash: [u8; 32],
    pub delta: Option<f64>,
    pub init: Option<InitCheck>,
    pub segments: Vec<SegmentCheck>,
    /// SGD steps recomputed while checking segments of this proof.
    pub recomputed_steps: usize,
    /// SGD steps spent on automatic delta calibration.
    pub calibration_steps: usize,
    /// SGD steps spent verifying a prior proof in the chain.
    pub prior_recomputed_steps: usize,
}

impl VerificationResult {
    fn new(proof_hash: [u8; 32]) -> Self {
        Self {
            reason: None,
            proof_hash,
            delta: None,
            init: None,
            segments: Vec::new(),
            recomputed_steps: 0,
            calibration_steps: 0,
            prior_recomputed_steps: 0,
        }
    }

    fn rejected(mut self, reason: FailReason) -> Self {
        self.reason = Some(reason);
        self
    }

    pub fn is_success(&self) -> bool {
        self.reason.is_none()
    }

    pub fn verdict(&self) -> &'static str {
        if self.is_success() {
            "success"
        } else {
            "fail"
        }
    }

    pub fn max_distance(&self) -> Option<f64> {
        self.segments
            .iter()
            .filter_map(|s| s.distance)
            .reduce(f64::max)
    }

    /// Plain `key: value` report followed by one row per checked segment.
    pub fn to_report(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        writeln!(out, "verdict: {}", self.verdict()).unwrap();
        match &self.reason {
            Some(r) => {
                writeln!(out, "reason: {}", r.code()).unwrap();
                writeln!(out, "detail: {r}").unwrap();
            }
            None => writeln!(out, "reason: none").unwrap(),
        }
        writeln!(out, "proof_hash: {}", hex::encode(self.proof_hash)).unwrap();
        if let Some(d) = self.delta {
            writeln!(out, "delta: {d:e}").unwrap();
        }
        writeln!(out, "recomputed_steps: {}", self.recomputed_steps).unwrap();
        writeln!(out, "calibration_steps: {}", self.calibration_steps).unwrap();
        writeln!(
            out,
            "prior_recomputed_steps: {}",
            self.prior_recomputed_steps
        )
        .unwrap();
        if let Some(init) = &self.init {
            writeln!(out, "init_threshold: {:e}", init.threshold).unwrap();
            for (l, r) in init.layers.iter().enumerate() {
                writeln!(
                    out,
                    "init_layer {l}: n={} D={:.6} p={:.6e}",
                    r.n, r.statistic, r.p_value
                )
                .unwrap();
            }
        }
        writeln!(out, "segments:").unwrap();
        writeln!(out, "epoch,rank,start,end,magnitude,distance").unwrap();
        for s in &self.segments {
            let rank = s.rank.map_or("-".to_owned(), |r| r.to_string());
            let dist = s.distance.map_or("-".to_owned(), |d| format!("{d:e}"));
            writeln!(
                out,
                "{},{rank},{},{},{:e},{dist}",
                s.epoch, s.start, s.end, s.magnitude
            )
            .unwrap();
        }
        out
    }
}

/// Per epoch, indices of segments sorted by magnitude (descending, ties by
/// ascending start step), truncated to `q`. `items` are `(start, magnitude)`
/// in ascending start order.
pub fn top_q_by_epoch(
    items: &[(usize, f64)],
    steps_per_epoch: usize,
    epochs: usize,
    q: usize,
) -> Vec<Vec<usize>> {
    let mut by_epoch = vec![Vec::new(); epochs];
    for (i, &(start, _)) in items.iter().enumerate() {
        by_epoch[(start / steps_per_epoch).min(epochs - 1)].push(i);
    }
    for list in &mut by_epoch {
        // Stable sort keeps ascending-start order among equal magnitudes.
        list.sort_by(|&a, &b| items[b].1.total_cmp(&items[a].1));
        list.truncate(q);
    }
    by_epoch
}

/// Optional inputs for chained (warm-started) proofs.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyContext<'a> {
    pub prior: Option<&'a PoLProof>,
    pub ledger: Option<&'a ProofLedger>,
}

fn structural(e: Error) -> FailReason {
    match e {
        Error::NotWhitelisted(tag) => {
            FailReason::MetadataNotWhitelisted(format!("'{tag}' is not on the accepted list"))
        }
        other => FailReason::Structural(other.to_string()),
    }
}

/// Runs the verification procedure on a decoded proof.
///
/// Order: structure, metadata whitelist, dataset/k consistency, init check
/// (KS or chain lookup), then top-Q segment re-execution per epoch with fail
/// fast. Config errors are returned as `Err`; every problem with the proof
/// itself is a failed result.
pub fn verify_proof(
    proof: &PoLProof,
    dataset: &Dataset,
    config: &VerificationConfig,
    ctx: VerifyContext<'_>,
) -> Result<VerificationResult> {
    config.validate()?;
    let res = VerificationResult::new(proof.content_hash());
    if let Err(e) = proof.validate() {
        return Ok(res.rejected(structural(e)));
    }
    let m = &proof.meta;
    let arch = match m.arch() {
        Ok(a) => a,
        Err(e) => return Ok(res.rejected(structural(e))),
    };
    if let InitOrigin::Claim { strategy } = &m.origin {
        if let Err(e) = InitStrategy::from_name(strategy) {
            return Ok(res.rejected(structural(e)));
        }
    }
    if let Some(k) = config.k {
        if k != m.k {
            return Ok(res.rejected(FailReason::Structural(format!(
                "proof uses k={}, verifier expects k={k}",
                m.k
            ))));
        }
    }
    if dataset.len() != m.dataset_size || dataset.dim() != arch.input_dim() {
        return Ok(res.rejected(FailReason::Structural(format!(
            "dataset is {}x{}, proof expects {} rows of width {}",
            dataset.len(),
            dataset.dim(),
            m.dataset_size,
            arch.input_dim()
        ))));
    }
    match verify_segments_and_init(proof, &arch, dataset, config, ctx, res) {
        Ok(r) => Ok(r),
        Err((res, e)) => Ok(res.rejected(structural(e))),
    }
}

type Partial = std::result::Result<VerificationResult, (VerificationResult, Error)>;

fn verify_segments_and_init(
    proof: &PoLProof,
    arch: &ModelArch,
    dataset: &Dataset,
    config: &VerificationConfig,
    ctx: VerifyContext<'_>,
    mut res: VerificationResult,
) -> Partial {
    let m = &proof.meta;
    let w0 = proof.initial_weights().expect("validated proof has W_0");

    match &m.origin {
        InitOrigin::Claim { strategy } => {
            let strategy = InitStrategy::from_name(strategy).expect("checked by caller");
            let check = match verify_initialization(w0, strategy, config.alpha, config.bonferroni) {
                Ok(c) => c,
                Err(e) => return Err((res, e)),
            };
            let failure = check
                .first_failure()
                .map(|(layer, r)| FailReason::InitKsFail {
                    layer,
                    statistic: r.statistic,
                    p_value: r.p_value,
                    threshold: check.threshold,
                });
            res.init = Some(check);
            if let Some(reason) = failure {
                return Ok(res.rejected(reason));
            }
        }
        InitOrigin::Prior { proof_hash } => {
            let w0_digest = weights_digest(w0, m.precision);
            let recorded = ctx.ledger.and_then(|l| l.lookup(proof_hash));
            match (recorded, ctx.prior) {
                (Some(entry), _) if entry.accepted => {
                    if entry.final_weights != w0_digest {
                        return Ok(res.rejected(FailReason::InitProofMissing(
                            "recorded prior ends at different weights than this proof's W_0".into(),
                        )));
                    }
                }
                (_, Some(prior)) => {
                    if prior.content_hash() != *proof_hash {
                        return Ok(res.rejected(FailReason::InitProofMissing(
                            "supplied prior proof does not match the referenced hash".into(),
                        )));
                    }
                    let prior_ctx = VerifyContext {
                        prior: None,
                        ledger: ctx.ledger,
                    };
                    let sub = match verify_proof(prior, dataset, config, prior_ctx) {
                        Ok(r) => r,
                        Err(e) => return Err((res, e)),
                    };
                    res.prior_recomputed_steps = sub.recomputed_steps + sub.prior_recomputed_steps;
                    if let Some(r) = sub.reason {
                        return Ok(res.rejected(FailReason::InitProofMissing(format!(
                            "prior proof failed verification ({r})"
                        ))));
                    }
                    if prior.final_weights.values() != w0.values() {
                        return Ok(res.rejected(FailReason::InitProofMissing(
                            "prior proof ends at different weights than this proof's W_0".into(),
                        )));
                    }
                }
                _ => {
                    return Ok(res.rejected(FailReason::InitProofMissing(format!(
                        "no accepted record of prior proof {}",
                        hex::encode(proof_hash)
                    ))))
                }
            }
        }
    }

    let delta = match config.delta {
        Delta::Fixed(d) => d,
        Delta::Auto => {
            match calibrate_delta(
                proof,
                dataset,
                config.d2,
                config.n_probe,
                config.safety_factor,
                config.seed,
            ) {
                Ok(c) => {
                    res.calibration_steps = c.steps;
                    c.delta()
                }
                Err(e) => return Err((res, e)),
            }
        }
    };
    res.delta = Some(delta);

    let segs = segments(proof);
    let mut items = Vec::with_capacity(segs.len());
    for &seg in &segs {
        match update_magnitude(proof, seg, config.d1) {
            Ok(mag) => items.push((seg.start, mag)),
            Err(e) => return Err((res, e)),
        }
    }
    let ranked = top_q_by_epoch(&items, m.steps_per_epoch, m.epochs, config.q);

    let mut plan: Vec<(usize, Option<usize>, usize)> = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x5eed_e7a5);
    for (epoch, list) in ranked.iter().enumerate() {
        plan.extend(
            list.iter()
                .enumerate()
                .map(|(rank, &i)| (epoch, Some(rank), i)),
        );
        if config.extra_random > 0 {
            let mut rest: Vec<usize> = (0..segs.len())
                .filter(|&i| {
                    (segs[i].start / m.steps_per_epoch).min(m.epochs - 1) == epoch
                        && !list.contains(&i)
                })
                .collect();
            rest.shuffle(&mut rng);
            rest.truncate(config.extra_random);
            rest.sort_unstable();
            plan.extend(rest.into_iter().map(|i| (epoch, None, i)));
        }
    }
    let last = segs.len() - 1;
    if segs[last].len() < m.k && !plan.iter().any(|p| p.2 == last) {
        plan.push((m.epochs - 1, None, last));
    }

    for (epoch, rank, i) in plan {
        let seg: Segment = segs[i];
        let mut check = SegmentCheck {
            epoch,
            rank,
            start: seg.start,
            end: seg.end,
            magnitude: items[i].1,
            distance: None,
        };
        match first_hash_mismatch(proof, dataset, seg) {
            Ok(None) => {}
            Ok(Some(step)) => {
                res.segments.push(check);
                return Ok(res.rejected(FailReason::SignatureMismatch { step }));
            }
            Err(e) => return Err((res, e)),
        }
        let distance = match segment_distance(arch, proof, dataset, seg, config.d2) {
            Ok(d) => d,
            Err(e) => return Err((res, e)),
        };
        res.recomputed_steps += seg.len();
        check.distance = Some(distance);
        res.segments.push(check);
        if !(distance <= delta) {
            return Ok(res.rejected(FailReason::SegmentDistanceExceeded {
                start: seg.start,
                end: seg.end,
                distance,
                delta,
            }));
        }
    }
    Ok(res)
}

/// Keys needed to open a sealed proof.
#[derive(Debug, Clone, Copy)]
pub struct SealKeys<'a> {
    pub verifier: &'a KeyPair,
    pub prover: &'a PublicKeys,
}

/// Unseals and verifies. A prior given in sealed form must open with the same keys.
pub fn verify(
    sealed: &SealedProof,
    prior: Option<&SealedProof>,
    keys: SealKeys<'_>,
    dataset: &Dataset,
    config: &VerificationConfig,
    ledger: Option<&ProofLedger>,
) -> Result<VerificationResult> {
    config.validate()?;
    let reject = |msg: String| {
        let mut r = VerificationResult::new([0; 32]);
        r.reason = Some(FailReason::EnvelopeRejected(msg));
        r
    };
    let proof = match unseal(sealed, keys.verifier, keys.prover) {
        Ok(p) => p,
        Err(e) => return Ok(reject(e.to_string())),
    };
    let prior = match prior
        .map(|s| unseal(s, keys.verifier, keys.prover))
        .transpose()
    {
        Ok(p) => p,
        Err(e) => return Ok(reject(format!("prior: {e}"))),
    };
    verify_proof(
        &proof,
        dataset,
        config,
        VerifyContext {
            prior: prior.as_ref(),
            ledger,
        },
    )
}
