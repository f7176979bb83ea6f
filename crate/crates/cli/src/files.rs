use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};

use pol_core::proof::{decode_proof, KeyPair, PoLProof, PublicKeys, SealedProof};
use pol_core::verify::ProofLedger;

pub const PROVER_KEY: &str = "prover.key";
pub const PROVER_PUB: &str = "prover.pub";
pub const VERIFIER_KEY: &str = "verifier.key";
pub const VERIFIER_PUB: &str = "verifier.pub";

/// A proof as found on disk: a plain `.pol` transcript or a sealed
/// `.envelope` with its `.sig` next to it.
pub enum ProofFile {
    Plain(PoLProof),
    Sealed(SealedProof),
}

impl ProofFile {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "envelope") {
            let sig_path = path.with_extension("sig");
            let sig = fs::read(&sig_path)
                .with_context(|| format!("reading signature {}", sig_path.display()))?;
            let sealed = SealedProof::from_parts(bytes, &sig)
                .with_context(|| format!("parsing {}", sig_path.display()))?;
            return Ok(ProofFile::Sealed(sealed));
        }
        let proof = decode_proof(&bytes).with_context(|| format!("decoding {}", path.display()))?;
        Ok(ProofFile::Plain(proof))
    }
}

pub fn read_plain(path: &Path) -> Result<PoLProof> {
    match ProofFile::read(path)? {
        ProofFile::Plain(p) => Ok(p),
        ProofFile::Sealed(_) => bail!("{} is sealed; pass the .pol file", path.display()),
    }
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn keypair(dir: &Path, name: &str) -> Result<KeyPair> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    KeyPair::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn public_keys(dir: &Path, name: &str) -> Result<PublicKeys> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    PublicKeys::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Missing ledger file reads as an empty ledger.
pub fn read_ledger(path: &Path) -> Result<ProofLedger> {
    if !path.exists() {
        return Ok(ProofLedger::new());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ProofLedger::from_text(&text).with_context(|| format!("parsing ledger {}", path.display()))
}

pub fn resolve(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn parse_hash(text: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(text.trim()).context("proof hash must be hex")?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| anyhow::anyhow!("proof hash must be 32 bytes, got {}", b.len()))
}
