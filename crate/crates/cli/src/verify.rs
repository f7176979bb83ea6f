use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use pol_core::verify::{verify, verify_proof, SealKeys, VerificationResult, VerifyContext};

use crate::config::{Overrides, RunConfig};
use crate::files::{self, ProofFile, PROVER_PUB, VERIFIER_KEY};
use crate::EXIT_REJECTED;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// NAME.pol, or NAME.envelope with NAME.sig beside it
    pub proof: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Earlier proof a warm-started proof continues from (same form as PROOF)
    #[arg(long, value_name = "PROOF")]
    pub prior: Option<PathBuf>,
    /// Ledger consulted for warm-start chains
    #[arg(long, value_name = "FILE")]
    pub ledger: Option<PathBuf>,
    /// Keys directory for sealed proofs (needs verifier.key and prover.pub)
    #[arg(long, value_name = "DIR", default_value = "keys")]
    pub keys: PathBuf,
    /// Report file, relative to --out-dir [default: PROOF stem + .report]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

/// Verifies without printing; shared with `ledger add`.
pub fn check(args: &VerifyArgs, cfg: &RunConfig, out: &Path) -> Result<VerificationResult> {
    let desk = cfg.desk()?;
    let config = cfg.verification()?;
    let ledger = args.ledger.as_deref().map(files::read_ledger).transpose()?;
    let prior = args.prior.as_deref().map(ProofFile::read).transpose()?;
    let res = match (ProofFile::read(&args.proof)?, prior) {
        (ProofFile::Plain(proof), prior) => {
            let prior = match prior {
                None => None,
                Some(ProofFile::Plain(p)) => Some(p),
                Some(ProofFile::Sealed(_)) => bail!("prior must be a .pol file like the proof"),
            };
            let ctx = VerifyContext {
                prior: prior.as_ref(),
                ledger: ledger.as_ref(),
            };
            verify_proof(&proof, &desk.dataset, &config, ctx)?
        }
        (ProofFile::Sealed(sealed), prior) => {
            let prior = match prior {
                None => None,
                Some(ProofFile::Sealed(p)) => Some(p),
                Some(ProofFile::Plain(_)) => bail!("prior must be sealed like the proof"),
            };
            let dir = files::resolve(out, &args.keys);
            let verifier = files::keypair(&dir, VERIFIER_KEY)?;
            let prover = files::public_keys(&dir, PROVER_PUB)?;
            let keys = SealKeys {
                verifier: &verifier,
                prover: &prover,
            };
            verify(&sealed, prior.as_ref(), keys, &desk.dataset, &config, ledger.as_ref())?
        }
    };
    Ok(res)
}

/// 0 on success, 2 on a rejected proof, 3 when the artifact itself is broken.
pub fn exit_code(res: &VerificationResult) -> ExitCode {
    match &res.reason {
        None => ExitCode::SUCCESS,
        Some(r) if r.is_structural() => ExitCode::from(crate::EXIT_ERROR),
        Some(_) => ExitCode::from(EXIT_REJECTED),
    }
}

pub fn run(args: VerifyArgs, out: &Path) -> Result<ExitCode> {
    let cfg = args.overrides.load()?;
    let res = check(&args, &cfg, out)?;
    let report_path = match &args.report {
        Some(p) => files::resolve(out, p),
        None => {
            let stem = args.proof.file_stem().unwrap_or_default().to_string_lossy();
            out.join(format!("{stem}.report"))
        }
    };
    let report = res.to_report();
    files::write(&report_path, &report)?;
    print!("{report}");
    println!("report: {}", report_path.display());
    if let Some(r) = &res.reason {
        eprintln!("reason: {} ({r})", r.code());
    }
    Ok(exit_code(&res))
}

pub fn print_summary(res: &VerificationResult) {
    println!("verdict: {}", res.verdict());
    match &res.reason {
        Some(r) => println!("reason: {} ({r})", r.code()),
        None => println!("reason: none"),
    }
    println!("proof_hash: {}", hex::encode(res.proof_hash));
}
