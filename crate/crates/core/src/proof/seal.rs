//! Confidential, attributable proof transport.
//!
//! The encoded proof is encrypted to the verifier (ephemeral x25519,
//! HKDF-SHA256, ChaCha20-Poly1305) and the resulting envelope is signed by the
//! prover with ed25519 together with the prover id and a timestamp.
//!
//! ```text
//! envelope  "POLE" | u16 version | 32-byte ephemeral public key | 12-byte nonce | ciphertext
//! .sig      "POLS" | u16 version | u16 id length | id | u64 timestamp | 64-byte signature
//! ```

use chacha20poly1305::aead::{Aead, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, KeyInit, Nonce};
use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use thiserror::Error;
use x25519_dalek::{PublicKey as BoxPublic, StaticSecret};

use super::{decode_proof, encode_proof, CodecError, PoLProof};

pub const ENVELOPE_MAGIC: &[u8; 4] = b"POLE";
pub const SIG_MAGIC: &[u8; 4] = b"POLS";
const SEAL_VERSION: u16 = 1;
const SIGN_DOMAIN: &[u8] = b"pol-seal-v1";
const KDF_INFO: &[u8] = b"pol-envelope-key-v1";
const HEADER_LEN: usize = 4 + 2 + 32;
const NONCE_LEN: usize = 12;

const SECRET_LABEL: &str = "pol-secret-key-v1";
const PUBLIC_LABEL: &str = "pol-public-key-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SealError {
    #[error("prover signature does not verify")]
    BadSignature,
    #[error("envelope could not be decrypted with this key")]
    Decryption,
    #[error("malformed sealed proof: {0}")]
    Malformed(String),
    #[error("bad key file: {0}")]
    Key(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Public half of a party's keys: signature verification and encryption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKeys {
    pub verifying: VerifyingKey,
    pub encryption: BoxPublic,
}

/// A party's secret keys: ed25519 for signing, x25519 for receiving envelopes.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
    decryption: StaticSecret,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &self.public())
            .finish_non_exhaustive()
    }
}

fn parse_hex32(s: &str) -> Result<[u8; 32], SealError> {
    let mut out = [0u8; 32];
    hex::decode_to_slice(s.trim(), &mut out).map_err(|e| SealError::Key(e.to_string()))?;
    Ok(out)
}

/// Reads `label`, then `sign <hex>` and `box <hex>` lines.
fn parse_key_text(text: &str, label: &str) -> Result<([u8; 32], [u8; 32]), SealError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some(label) {
        return Err(SealError::Key(format!("expected '{label}' header")));
    }
    let mut field = |name: &str| -> Result<[u8; 32], SealError> {
        let line = lines
            .next()
            .ok_or_else(|| SealError::Key(format!("missing '{name}' line")))?;
        let value = line
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| SealError::Key(format!("expected '{name} <hex>'")))?;
        parse_hex32(value)
    };
    let sign = field("sign")?;
    let boxk = field("box")?;
    Ok((sign, boxk))
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self {
            signing: SigningKey::generate(rng),
            decryption: StaticSecret::random_from_rng(rng),
        }
    }

    pub fn public(&self) -> PublicKeys {
        PublicKeys {
            verifying: self.signing.verifying_key(),
            encryption: BoxPublic::from(&self.decryption),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "{SECRET_LABEL}\nsign {}\nbox {}\n",
            hex::encode(self.signing.to_bytes()),
            hex::encode(self.decryption.to_bytes())
        )
    }

    pub fn from_text(text: &str) -> Result<Self, SealError> {
        let (sign, boxk) = parse_key_text(text, SECRET_LABEL)?;
        Ok(Self {
            signing: SigningKey::from_bytes(&sign),
            decryption: StaticSecret::from(boxk),
        })
    }
}

impl PublicKeys {
    pub fn to_text(&self) -> String {
        format!(
            "{PUBLIC_LABEL}\nsign {}\nbox {}\n",
            hex::encode(self.verifying.to_bytes()),
            hex::encode(self.encryption.to_bytes())
        )
    }

    pub fn from_text(text: &str) -> Result<Self, SealError> {
        let (sign, boxk) = parse_key_text(text, PUBLIC_LABEL)?;
        Ok(Self {
            verifying: VerifyingKey::from_bytes(&sign)
                .map_err(|e| SealError::Key(e.to_string()))?,
            encryption: BoxPublic::from(boxk),
        })
    }
}

/// Encrypted proof plus the prover's signature over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedProof {
    pub envelope: Vec<u8>,
    pub signature: [u8; 64],
    pub prover_id: String,
    pub timestamp: u64,
}

fn signed_message(prover_id: &str, timestamp: u64, envelope: &[u8]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(SIGN_DOMAIN.len() + prover_id.len() + 10 + envelope.len());
    msg.extend_from_slice(SIGN_DOMAIN);
    msg.extend_from_slice(&(prover_id.len() as u16).to_le_bytes());
    msg.extend_from_slice(prover_id.as_bytes());
    msg.extend_from_slice(&timestamp.to_le_bytes());
    msg.extend_from_slice(envelope);
    msg
}

fn derive_key(shared: &[u8; 32], eph: &BoxPublic, recipient: &BoxPublic) -> Key {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(eph.as_bytes());
    salt[32..].copy_from_slice(recipient.as_bytes());
    let hk = Hkdf::<Sha256>::new(Some(&salt), shared);
    let mut key = [0u8; 32];
    hk.expand(KDF_INFO, &mut key)
        .expect("32 bytes is a valid HKDF length");
    key.into()
}

impl SealedProof {
    /// Detached signature file contents.
    pub fn sig_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 + 2 + self.prover_id.len() + 8 + 64);
        out.extend_from_slice(SIG_MAGIC);
        out.extend_from_slice(&SEAL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.prover_id.len() as u16).to_le_bytes());
        out.extend_from_slice(self.prover_id.as_bytes());
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(&self.signature);
        out
    }

    pub fn from_parts(envelope: Vec<u8>, sig_file: &[u8]) -> Result<Self, SealError> {
        let malformed = |m: &str| SealError::Malformed(m.to_owned());
        let rest = sig_file
            .strip_prefix(SIG_MAGIC.as_slice())
            .ok_or_else(|| malformed("signature file has bad magic"))?;
        if rest.len() < 4 {
            return Err(malformed("signature file truncated"));
        }
        let version = u16::from_le_bytes([rest[0], rest[1]]);
        if version != SEAL_VERSION {
            return Err(SealError::Malformed(format!(
                "unsupported signature version {version}"
            )));
        }
        let id_len = u16::from_le_bytes([rest[2], rest[3]]) as usize;
        let rest = &rest[4..];
        if rest.len() != id_len + 8 + 64 {
            return Err(malformed("signature file has the wrong length"));
        }
        let prover_id = String::from_utf8(rest[..id_len].to_vec())
            .map_err(|_| malformed("prover id is not UTF-8"))?;
        let timestamp = u64::from_le_bytes(rest[id_len..id_len + 8].try_into().unwrap());
        let signature = rest[id_len + 8..].try_into().unwrap();
        Ok(Self {
            envelope,
            signature,
            prover_id,
            timestamp,
        })
    }
}

/// Encrypts `proof` to `verifier` and signs the envelope as `prover`.
pub fn seal<R: RngCore + CryptoRng>(
    proof: &PoLProof,
    verifier: &PublicKeys,
    prover: &KeyPair,
    prover_id: &str,
    timestamp: u64,
    rng: &mut R,
) -> SealedProof {
    let plaintext = encode_proof(proof).bytes;
    let eph = StaticSecret::random_from_rng(&mut *rng);
    let eph_pub = BoxPublic::from(&eph);
    let shared = eph.diffie_hellman(&verifier.encryption);
    let key = derive_key(shared.as_bytes(), &eph_pub, &verifier.encryption);
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);

    let mut envelope = Vec::with_capacity(HEADER_LEN + NONCE_LEN + plaintext.len() + 16);
    envelope.extend_from_slice(ENVELOPE_MAGIC);
    envelope.extend_from_slice(&SEAL_VERSION.to_le_bytes());
    envelope.extend_from_slice(eph_pub.as_bytes());
    let ct = ChaCha20Poly1305::new(&key)
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: &plaintext,
                aad: &envelope,
            },
        )
        .expect("encryption of an in-memory buffer cannot fail");
    envelope.extend_from_slice(&nonce);
    envelope.extend_from_slice(&ct);

    let signature = prover
        .signing
        .sign(&signed_message(prover_id, timestamp, &envelope))
        .to_bytes();
    SealedProof {
        envelope,
        signature,
        prover_id: prover_id.to_owned(),
        timestamp,
    }
}

/// Checks the prover's signature, then decrypts and decodes the proof.
/// Nothing is decrypted unless the signature verifies.
pub fn unseal(
    sealed: &SealedProof,
    verifier: &KeyPair,
    prover: &PublicKeys,
) -> Result<PoLProof, SealError> {
    let msg = signed_message(&sealed.prover_id, sealed.timestamp, &sealed.envelope);
    prover
        .verifying
        .verify_strict(&msg, &Signature::from_bytes(&sealed.signature))
        .map_err(|_| SealError::BadSignature)?;

    let env = &sealed.envelope;
    if env.len() < HEADER_LEN + NONCE_LEN + 16 || &env[..4] != ENVELOPE_MAGIC {
        return Err(SealError::Malformed("bad envelope header".into()));
    }
    let version = u16::from_le_bytes([env[4], env[5]]);
    if version != SEAL_VERSION {
        return Err(SealError::Malformed(format!(
            "unsupported envelope version {version}"
        )));
    }
    let (header, rest) = env.split_at(HEADER_LEN);
    let eph_pub = BoxPublic::from(<[u8; 32]>::try_from(&header[6..]).unwrap());
    let (nonce, ct) = rest.split_at(NONCE_LEN);
    let own = BoxPublic::from(&verifier.decryption);
    let shared = verifier.decryption.diffie_hellman(&eph_pub);
    if !shared.was_contributory() {
        return Err(SealError::Decryption);
    }
    let key = derive_key(shared.as_bytes(), &eph_pub, &own);
    let plaintext = ChaCha20Poly1305::new(&key)
        .decrypt(
            Nonce::from_slice(nonce),
            Payload {
                msg: ct,
                aad: header,
            },
        )
        .map_err(|_| SealError::Decryption)?;
    Ok(decode_proof(&plaintext)?)
}
