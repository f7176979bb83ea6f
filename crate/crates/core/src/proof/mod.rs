//! Training transcripts: creation, binary encoding, sealing, and size/cost formulas.

mod codec;
mod cost;
mod create;
mod hash;
mod seal;

use std::fmt;

use half::f16;

use crate::error::{Error, Result};
use crate::sgd::{layout_for_dims, Activation, LossKind, ModelArch, OptimizerKind, WeightVector};

pub use codec::{
    decode_proof, encode_proof, CodecError, EncodedProof, SectionSizes, MAGIC, VERSION,
};
pub use cost::{expected_transfer, proof_size_bytes};
pub use create::{create_pol, create_pol_with_hook, ProveOutput, ProveParams, StartState};
pub use hash::hash_batch;
pub use seal::{
    seal, unseal, KeyPair, PublicKeys, SealError, SealedProof, ENVELOPE_MAGIC, SIG_MAGIC,
};

/// SHA-256 of one minibatch (rows and index list).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BatchDigest(pub [u8; 32]);

impl BatchDigest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for BatchDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BatchDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BatchDigest({self})")
    }
}

/// Storage precision of checkpointed weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    #[default]
    F32,
    F16,
}

impl Precision {
    pub fn bytes_per_value(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F16 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F16 => "f16",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "f32" => Ok(Precision::F32),
            "f16" => Ok(Precision::F16),
            other => Err(Error::InvalidConfig(format!("unknown precision '{other}'"))),
        }
    }

    /// Relative rounding unit.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::F32 => f64::from(f32::EPSILON),
            Precision::F16 => f16::EPSILON.to_f64(),
        }
    }

    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::F32 => f64::from(v as f32),
            Precision::F16 => f16::from_f64(v).to_f64(),
        }
    }

    pub fn round_in_place(self, values: &mut [f64]) {
        values.iter_mut().for_each(|v| *v = self.round(*v));
    }

    pub fn rounded(self, w: &WeightVector) -> WeightVector {
        let mut out = w.clone();
        self.round_in_place(out.values_mut());
        out
    }
}

/// Where W_0 comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InitOrigin {
    /// Fresh draw from the named public strategy.
    Claim { strategy: String },
    /// Warm start from the final weights of an earlier proof.
    Prior { proof_hash: [u8; 32] },
}

/// Everything the verifier needs besides the transcript itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofMeta {
    pub layer_dims: Vec<usize>,
    pub activations: Vec<Activation>,
    /// Kept as free text so that unrecognised objectives can be reported.
    pub loss_tag: String,
    pub optimizer_tag: String,
    pub origin: InitOrigin,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub k: usize,
    /// Std of the additive noise the prover ran with (0 when noiseless).
    pub noise_sigma: f64,
    pub dataset_size: usize,
    pub precision: Precision,
}

impl ProofMeta {
    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Resolves the declared architecture and loss against the whitelist.
    pub fn arch(&self) -> Result<ModelArch> {
        let loss = LossKind::from_name(&self.loss_tag)?;
        OptimizerKind::from_name(&self.optimizer_tag)?;
        ModelArch::new(self.layer_dims.clone(), self.activations.clone(), loss)
    }
}

/// A proof-of-learning transcript: checkpoints every `k` steps, the batch
/// indices and digests of every step, per-step learning rates, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PoLProof {
    pub meta: ProofMeta,
    pub step_etas: Vec<f64>,
    pub indices: Vec<Vec<usize>>,
    pub hashes: Vec<BatchDigest>,
    /// One slot per step `t in 0..T`; filled exactly when `t % k == 0`.
    pub checkpoints: Vec<Option<WeightVector>>,
    pub final_weights: WeightVector,
}

impl PoLProof {
    pub fn total_steps(&self) -> usize {
        self.step_etas.len()
    }

    pub fn initial_weights(&self) -> Option<&WeightVector> {
        self.checkpoints.first().and_then(Option::as_ref)
    }

    /// Steps with a stored checkpoint, ascending.
    pub fn checkpoint_steps(&self) -> Vec<usize> {
        self.checkpoints
            .iter()
            .enumerate()
            .filter_map(|(t, c)| c.as_ref().map(|_| t))
            .collect()
    }

    /// State recorded after step `t` (the next checkpoint or the final weights).
    pub fn state_at(&self, t: usize) -> Option<&WeightVector> {
        if t == self.total_steps() {
            Some(&self.final_weights)
        } else {
            self.checkpoints.get(t).and_then(Option::as_ref)
        }
    }

    /// Digest of the canonical encoding; identifies the proof in a ledger.
    pub fn content_hash(&self) -> [u8; 32] {
        encode_proof(self).digest
    }

    /// Re-stores every checkpoint at a lower precision.
    pub fn downcast(&self, precision: Precision) -> PoLProof {
        let mut out = self.clone();
        out.meta.precision = precision;
        for w in out.checkpoints.iter_mut().flatten() {
            precision.round_in_place(w.values_mut());
        }
        precision.round_in_place(out.final_weights.values_mut());
        out
    }

    /// Internal consistency of lengths, shapes and the checkpoint schedule.
    /// Says nothing about whether the training actually happened.
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        let bad = |msg: String| Err(Error::Structural(msg));
        if m.k == 0 || m.epochs == 0 || m.steps_per_epoch == 0 {
            return bad("k, epochs and steps per epoch must be >= 1".into());
        }
        if m.layer_dims.len() < 2 || m.layer_dims.contains(&0) {
            return bad(format!("invalid layer dims {:?}", m.layer_dims));
        }
        if m.activations.len() != m.layer_dims.len() - 2 {
            return bad("activation count does not match hidden layers".into());
        }
        if !(m.noise_sigma.is_finite() && m.noise_sigma >= 0.0) {
            return bad(format!("invalid noise sigma {}", m.noise_sigma));
        }
        let t = m.total_steps();
        for (name, len) in [
            ("learning rates", self.step_etas.len()),
            ("index lists", self.indices.len()),
            ("batch digests", self.hashes.len()),
            ("checkpoint slots", self.checkpoints.len()),
        ] {
            if len != t {
                return bad(format!("{len} {name} for {t} steps"));
            }
        }
        if let Some(eta) = self
            .step_etas
            .iter()
            .find(|e| !(e.is_finite() && **e > 0.0))
        {
            return bad(format!("invalid learning rate {eta}"));
        }
        for (step, idx) in self.indices.iter().enumerate() {
            if idx.is_empty() {
                return bad(format!("empty batch at step {step}"));
            }
            if let Some(&i) = idx.iter().find(|&&i| i >= m.dataset_size) {
                return bad(format!("index {i} at step {step} beyond dataset size"));
            }
        }
        let layout = layout_for_dims(&m.layer_dims);
        for (step, slot) in self.checkpoints.iter().enumerate() {
            match (step % m.k == 0, slot) {
                (true, None) => return bad(format!("missing checkpoint at step {step}")),
                (false, Some(_)) => return bad(format!("unexpected checkpoint at step {step}")),
                (true, Some(w)) if w.layout() != layout.as_slice() => {
                    return bad(format!("checkpoint {step} has the wrong shape"))
                }
                _ => {}
            }
        }
        if self.final_weights.layout() != layout.as_slice() {
            return bad("final weights have the wrong shape".into());
        }
        let non_finite = self
            .checkpoints
            .iter()
            .flatten()
            .chain(std::iter::once(&self.final_weights))
            .any(|w| w.values().iter().any(|v| !v.is_finite()));
        if non_finite {
            return bad("non-finite weights".into());
        }
        Ok(())
    }
}
