use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Subcommand;
use pol_core::proof::unseal;
use pol_core::verify::{weights_digest, LedgerEntry};

use crate::files::{self, ProofFile, PROVER_PUB, VERIFIER_KEY};
use crate::verify::{self, VerifyArgs};
use crate::EXIT_REJECTED;

const DEFAULT_LEDGER: &str = "ledger.txt";

#[derive(Debug, Subcommand)]
pub enum LedgerCommand {
    /// Verify a proof and record the outcome (default ledger: OUT_DIR/ledger.txt)
    Add(VerifyArgs),
    /// Print the entry for a proof hash; exits 2 when absent
    Get {
        /// Hex proof hash as printed by `prove` or `verify`
        hash: String,
        #[arg(long, value_name = "FILE")]
        ledger: Option<PathBuf>,
    },
}

pub fn run(cmd: LedgerCommand, out: &Path) -> Result<ExitCode> {
    match cmd {
        LedgerCommand::Add(mut args) => {
            let path = args.ledger.get_or_insert_with(|| out.join(DEFAULT_LEDGER)).clone();
            let cfg = args.overrides.load()?;
            let res = verify::check(&args, &cfg, out)?;
            if res.reason.as_ref().is_some_and(|r| r.is_structural()) {
                verify::print_summary(&res);
                println!("not recorded");
                return Ok(verify::exit_code(&res));
            }
            let proof = match ProofFile::read(&args.proof)? {
                ProofFile::Plain(p) => p,
                ProofFile::Sealed(s) => {
                    let dir = files::resolve(out, &args.keys);
                    unseal(&s, &files::keypair(&dir, VERIFIER_KEY)?, &files::public_keys(&dir, PROVER_PUB)?)?
                }
            };
            let ledger = files::read_ledger(&path)?;
            let entry = LedgerEntry {
                verified_at: files::unix_now(),
                accepted: res.is_success(),
                final_weights: weights_digest(&proof.final_weights, proof.meta.precision),
            };
            ledger.record(res.proof_hash, entry)?;
            files::write(&path, ledger.to_text())?;
            verify::print_summary(&res);
            println!("recorded in {}", path.display());
            Ok(verify::exit_code(&res))
        }
        LedgerCommand::Get { hash, ledger } => {
            let path = ledger.unwrap_or_else(|| out.join(DEFAULT_LEDGER));
            if !path.exists() {
                bail!("no ledger at {}", path.display());
            }
            let key = files::parse_hash(&hash)?;
            match files::read_ledger(&path)?.lookup(&key) {
                Some(e) => {
                    println!("proof_hash: {}", hex::encode(key));
                    println!("accepted: {}", e.accepted);
                    println!("verified_at: {}", e.verified_at);
                    println!("final_weights: {}", hex::encode(e.final_weights));
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("not found: {}", hex::encode(key));
                    Ok(ExitCode::from(EXIT_REJECTED))
                }
            }
        }
    }
}
