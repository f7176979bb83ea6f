use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::RwLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::proof::Precision;
use crate::sgd::WeightVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("proof {0} is already recorded")]
    AlreadyRecorded(String),
    #[error("ledger line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// What the verifier remembers about a proof it has checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerEntry {
    /// Unix seconds.
    pub verified_at: u64,
    pub accepted: bool,
    /// Digest of the proof's final weights (see [`weights_digest`]), so a
    /// warm-started proof can be chained without the prior at hand.
    pub final_weights: [u8; 32],
}

/// SHA-256 over the weights stored at `precision` (little-endian).
pub fn weights_digest(w: &WeightVector, precision: Precision) -> [u8; 32] {
    let mut h = Sha256::new();
    for &v in w.values() {
        match precision {
            Precision::F32 => h.update((v as f32).to_le_bytes()),
            Precision::F16 => h.update(half::f16::from_f64(v).to_le_bytes()),
        }
    }
    h.finalize().into()
}

/// Write-once record of verified proofs keyed by content hash.
#[derive(Debug, Default)]
pub struct ProofLedger {
    entries: RwLock<HashMap<[u8; 32], LedgerEntry>>,
}

impl ProofLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, proof_hash: [u8; 32], entry: LedgerEntry) -> Result<(), LedgerError> {
        let mut map = self.entries.write().expect("ledger lock poisoned");
        if map.contains_key(&proof_hash) {
            return Err(LedgerError::AlreadyRecorded(hex::encode(proof_hash)));
        }
        map.insert(proof_hash, entry);
        Ok(())
    }

    pub fn lookup(&self, proof_hash: &[u8; 32]) -> Option<LedgerEntry> {
        self.entries
            .read()
            .expect("ledger lock poisoned")
            .get(proof_hash)
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("ledger lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One line per entry: `hash verified_at accepted|rejected weights_digest`,
    /// sorted by hash.
    pub fn to_text(&self) -> String {
        let map = self.entries.read().expect("ledger lock poisoned");
        let mut keys: Vec<_> = map.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let e = &map[k];
            let verdict = if e.accepted { "accepted" } else { "rejected" };
            writeln!(
                out,
                "{} {} {verdict} {}",
                hex::encode(k),
                e.verified_at,
                hex::encode(e.final_weights)
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LedgerError> {
        let ledger = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| LedgerError::Parse {
                line: i + 1,
                msg: msg.to_owned(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [hash, at, verdict, weights] = fields[..] else {
                return Err(err("expected 4 fields"));
            };
            let hex32 = |s: &str| {
                let mut out = [0u8; 32];
                hex::decode_to_slice(s, &mut out).map(|_| out)
            };
            let hash = hex32(hash).map_err(|_| err("bad proof hash"))?;
            let entry = LedgerEntry {
                verified_at: at.parse().map_err(|_| err("bad timestamp"))?,
                accepted: match verdict {
                    "accepted" => true,
                    "rejected" => false,
                    _ => return Err(err("verdict must be accepted or rejected")),
                },
                final_weights: hex32(weights).map_err(|_| err("bad weights digest"))?,
            };
            ledger
                .record(hash, entry)
                .map_err(|e| err(&e.to_string()))?;
        }
        Ok(ledger)
    }
}
