use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::Subcommand;
use pol_core::proof::KeyPair;
use rand::rngs::OsRng;

use crate::files::{self, PROVER_KEY, PROVER_PUB, VERIFIER_KEY, VERIFIER_PUB};

#[derive(Debug, Subcommand)]
pub enum KeysCommand {
    /// Generate prover and verifier key pairs
    Gen {
        /// Directory for the four key files, relative to --out-dir
        #[arg(long, default_value = "keys")]
        dir: PathBuf,
    },
}

pub fn run(cmd: KeysCommand, out: &Path) -> Result<ExitCode> {
    let KeysCommand::Gen { dir } = cmd;
    let dir = files::resolve(out, &dir);
    for (secret, public) in [(PROVER_KEY, PROVER_PUB), (VERIFIER_KEY, VERIFIER_PUB)] {
        let kp = KeyPair::generate(&mut OsRng);
        files::write(&dir.join(secret), kp.to_text())?;
        files::write(&dir.join(public), kp.public().to_text())?;
    }
    println!("keys written to {}", dir.display());
    Ok(ExitCode::SUCCESS)
}
