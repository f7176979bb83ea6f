//! Binary proof format.
//!
//! All integers little-endian. Layout:
//!
//! ```text
//! header       "POL1" | u16 version | u16 flags (bit 0: f16 checkpoints)
//! arch         u32 n | n x u32 layer dims | (n-2) x u8 activation codes
//! params       u32 E | u32 S | u32 k | u32 T | f64 sigma | str loss | str optimizer | u64 |D|
//! init         u8 0 + str strategy | u8 1 + 32-byte prior proof hash
//! etas         T x f64
//! indices      T x (varint count, count x varint index)
//! hashes       T x 32 bytes
//! checkpoints  u32 count | count x (u32 step, P values)
//! trailer      P values (final weights) | SHA-256 of every preceding byte
//! ```
//!
//! `str` is u16 length + UTF-8. Weight values are f32 or f16 per the flags.

use half::f16;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{BatchDigest, InitOrigin, PoLProof, Precision, ProofMeta};
use crate::sgd::{layout_for_dims, Activation, LayerSlice, WeightVector};

pub const MAGIC: &[u8; 4] = b"POL1";
pub const VERSION: u16 = 1;

const FLAG_F16: u16 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("not a proof file (bad magic)")]
    BadMagic,
    #[error("unsupported proof format version {0}")]
    UnsupportedVersion(u16),
    #[error("proof file truncated")]
    Truncated,
    #[error("proof content hash does not match trailer")]
    DigestMismatch,
    #[error("invalid proof encoding: {0}")]
    Invalid(String),
}

/// Byte counts per section of an encoded proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SectionSizes {
    pub header: usize,
    pub arch: usize,
    pub params: usize,
    pub init: usize,
    pub etas: usize,
    pub indices: usize,
    pub hashes: usize,
    /// Whole checkpoint block, including count and step numbers.
    pub checkpoints: usize,
    /// Weight bytes inside the checkpoint block only.
    pub checkpoint_payload: usize,
    pub trailer: usize,
    pub total: usize,
}

/// Encoded bytes, their section breakdown and the trailing content hash.
#[derive(Debug, Clone)]
pub struct EncodedProof {
    pub bytes: Vec<u8>,
    pub sections: SectionSizes,
    pub digest: [u8; 32],
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    let len = u16::try_from(s.len()).expect("tag longer than 64 KiB");
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("value exceeds u32 field");
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_varint(out: &mut Vec<u8>, v: usize) {
    leb128::write::unsigned(out, v as u64).expect("writing to a Vec cannot fail");
}

fn put_weights(out: &mut Vec<u8>, w: &WeightVector, precision: Precision) {
    match precision {
        Precision::F32 => {
            for &v in w.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Precision::F16 => {
            for &v in w.values() {
                out.extend_from_slice(&f16::from_f64(v).to_le_bytes());
            }
        }
    }
}

/// Serializes a proof. Checkpoint values are written at the proof's
/// declared precision.
pub fn encode_proof(proof: &PoLProof) -> EncodedProof {
    let m = &proof.meta;
    let mut out = Vec::new();
    let mut sections = SectionSizes::default();
    let mut mark = 0;
    let mut close = |out: &Vec<u8>, slot: &mut usize| {
        *slot = out.len() - mark;
        mark = out.len();
    };

    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if m.precision == Precision::F16 {
        FLAG_F16
    } else {
        0
    };
    out.extend_from_slice(&flags.to_le_bytes());
    close(&out, &mut sections.header);

    put_u32(&mut out, m.layer_dims.len());
    for &d in &m.layer_dims {
        put_u32(&mut out, d);
    }
    out.extend(m.activations.iter().map(|a| a.code()));
    close(&out, &mut sections.arch);

    put_u32(&mut out, m.epochs);
    put_u32(&mut out, m.steps_per_epoch);
    put_u32(&mut out, m.k);
    put_u32(&mut out, proof.total_steps());
    out.extend_from_slice(&m.noise_sigma.to_le_bytes());
    put_str(&mut out, &m.loss_tag);
    put_str(&mut out, &m.optimizer_tag);
    out.extend_from_slice(&(m.dataset_size as u64).to_le_bytes());
    close(&out, &mut sections.params);

    match &m.origin {
        InitOrigin::Claim { strategy } => {
            out.push(0);
            put_str(&mut out, strategy);
        }
        InitOrigin::Prior { proof_hash } => {
            out.push(1);
            out.extend_from_slice(proof_hash);
        }
    }
    close(&out, &mut sections.init);

    for eta in &proof.step_etas {
        out.extend_from_slice(&eta.to_le_bytes());
    }
    close(&out, &mut sections.etas);

    for idx in &proof.indices {
        put_varint(&mut out, idx.len());
        for &i in idx {
            put_varint(&mut out, i);
        }
    }
    close(&out, &mut sections.indices);

    for h in &proof.hashes {
        out.extend_from_slice(&h.0);
    }
    close(&out, &mut sections.hashes);

    let stored: Vec<_> = proof
        .checkpoints
        .iter()
        .enumerate()
        .filter_map(|(t, c)| c.as_ref().map(|w| (t, w)))
        .collect();
    put_u32(&mut out, stored.len());
    for (t, w) in stored {
        put_u32(&mut out, t);
        let before = out.len();
        put_weights(&mut out, w, m.precision);
        sections.checkpoint_payload += out.len() - before;
    }
    close(&out, &mut sections.checkpoints);

    put_weights(&mut out, &proof.final_weights, m.precision);
    let digest: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&digest);
    close(&out, &mut sections.trailer);
    sections.total = out.len();

    EncodedProof {
        bytes: out,
        sections,
        digest,
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if n > self.buf.len() {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<usize, CodecError> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn str(&mut self) -> Result<String, CodecError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| CodecError::Invalid("tag is not UTF-8".into()))
    }

    fn varint(&mut self) -> Result<usize, CodecError> {
        let v = leb128::read::unsigned(&mut self.buf).map_err(|e| match e {
            leb128::read::Error::IoError(_) => CodecError::Truncated,
            leb128::read::Error::Overflow => CodecError::Invalid("varint overflow".into()),
        })?;
        usize::try_from(v).map_err(|_| CodecError::Invalid("varint too large".into()))
    }

    fn weights(
        &mut self,
        layout: &[LayerSlice],
        p: usize,
        precision: Precision,
    ) -> Result<WeightVector, CodecError> {
        let raw = self.take(p * precision.bytes_per_value())?;
        let values = match precision {
            Precision::F32 => raw
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
                .collect(),
            Precision::F16 => raw
                .chunks_exact(2)
                .map(|c| f16::from_le_bytes(c.try_into().unwrap()).to_f64())
                .collect(),
        };
        WeightVector::from_layout(layout.to_vec(), values)
            .map_err(|e| CodecError::Invalid(e.to_string()))
    }

    fn remaining(&self) -> usize {
        self.buf.len()
    }
}

fn invalid(msg: impl Into<String>) -> CodecError {
    CodecError::Invalid(msg.into())
}

/// Parses and integrity-checks an encoded proof. Structural checks on the
/// decoded content are left to [`PoLProof::validate`].
pub fn decode_proof(bytes: &[u8]) -> Result<PoLProof, CodecError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN {
        return Err(CodecError::Truncated);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let mut r = Reader {
        buf: &body[MAGIC.len()..],
    };
    let version = r.u16()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err(CodecError::DigestMismatch);
    }
    let flags = r.u16()?;
    if flags & !FLAG_F16 != 0 {
        return Err(invalid(format!("unknown flags {flags:#x}")));
    }
    let precision = if flags & FLAG_F16 != 0 {
        Precision::F16
    } else {
        Precision::F32
    };

    let n_dims = r.u32()?;
    if !(2..=1024).contains(&n_dims) {
        return Err(invalid(format!("{n_dims} layer dims")));
    }
    let layer_dims = (0..n_dims)
        .map(|_| r.u32())
        .collect::<Result<Vec<_>, _>>()?;
    if layer_dims.contains(&0) {
        return Err(invalid("zero-width layer"));
    }
    let activations = (0..n_dims - 2)
        .map(|_| {
            let c = r.u8()?;
            Activation::from_code(c).ok_or_else(|| invalid(format!("unknown activation code {c}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let p = layer_dims
        .windows(2)
        .try_fold(0usize, |acc, w| {
            w[0].checked_mul(w[1])
                .and_then(|x| x.checked_add(w[1]))
                .and_then(|x| x.checked_add(acc))
        })
        .ok_or_else(|| invalid("parameter count overflows"))?;
    if p.saturating_mul(precision.bytes_per_value()) > r.remaining() {
        return Err(CodecError::Truncated);
    }
    let layout = layout_for_dims(&layer_dims);

    let epochs = r.u32()?;
    let steps_per_epoch = r.u32()?;
    let k = r.u32()?;
    let t = r.u32()?;
    let noise_sigma = r.f64()?;
    let loss_tag = r.str()?;
    let optimizer_tag = r.str()?;
    let dataset_size = usize::try_from(r.u64()?).map_err(|_| invalid("dataset size too large"))?;

    let origin = match r.u8()? {
        0 => InitOrigin::Claim { strategy: r.str()? },
        1 => InitOrigin::Prior {
            proof_hash: r.array()?,
        },
        other => return Err(invalid(format!("unknown init kind {other}"))),
    };

    // Every step costs at least an eta, a digest and one index byte.
    if t.saturating_mul(8 + DIGEST_LEN + 1) > r.remaining() {
        return Err(CodecError::Truncated);
    }
    let step_etas = (0..t).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let mut indices = Vec::with_capacity(t);
    for _ in 0..t {
        let n = r.varint()?;
        if n > r.remaining() {
            return Err(CodecError::Truncated);
        }
        indices.push((0..n).map(|_| r.varint()).collect::<Result<Vec<_>, _>>()?);
    }
    let hashes = (0..t)
        .map(|_| r.array().map(BatchDigest))
        .collect::<Result<Vec<_>, _>>()?;

    let count = r.u32()?;
    if count > t {
        return Err(invalid(format!("{count} checkpoints for {t} steps")));
    }
    let mut checkpoints: Vec<Option<WeightVector>> = vec![None; t];
    let mut last = None;
    for _ in 0..count {
        let step = r.u32()?;
        if step >= t || last.is_some_and(|l| step <= l) {
            return Err(invalid(format!("checkpoint step {step} out of order")));
        }
        last = Some(step);
        checkpoints[step] = Some(r.weights(&layout, p, precision)?);
    }
    let final_weights = r.weights(&layout, p, precision)?;
    if r.remaining() != 0 {
        return Err(invalid(format!(
            "{} unexpected bytes before trailer",
            r.remaining()
        )));
    }

    Ok(PoLProof {
        meta: ProofMeta {
            layer_dims,
            activations,
            loss_tag,
            optimizer_tag,
            origin,
            epochs,
            steps_per_epoch,
            k,
            noise_sigma,
            dataset_size,
            precision,
        },
        step_etas,
        indices,
        hashes,
        checkpoints,
        final_weights,
    })
}
