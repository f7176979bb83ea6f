use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use pol_core::proof::{create_pol, encode_proof, proof_size_bytes, seal, StartState};
use rand::rngs::OsRng;

use crate::config::Overrides;
use crate::files::{self, PROVER_KEY, VERIFIER_PUB};

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Base name of the output files
    #[arg(long, default_value = "proof")]
    pub name: String,
    /// Continue training from the final weights of this proof (.pol)
    #[arg(long, value_name = "PROOF")]
    pub warm_from: Option<PathBuf>,
    /// Also write NAME.envelope and NAME.sig, sealed with the keys in DIR
    #[arg(long, value_name = "DIR")]
    pub keys: Option<PathBuf>,
    #[arg(long, default_value = "prover")]
    pub prover_id: String,
}

pub fn run(args: ProveArgs, out: &Path) -> Result<ExitCode> {
    let cfg = args.overrides.load()?;
    let desk = cfg.desk()?;
    let hyper = desk.hyper(cfg.train.seed);
    let params = desk.prove_params(&hyper, cfg.train.k)?;
    let start = match &args.warm_from {
        None => StartState::Fresh,
        Some(p) => {
            let prior = files::read_plain(p)?;
            StartState::Warm {
                prior_hash: prior.content_hash(),
                weights: prior.final_weights,
            }
        }
    };
    let output = create_pol(&desk.arch, &desk.dataset, &hyper, &params, start)?;
    let proof = &output.proof;
    let encoded = encode_proof(proof);
    let pol_path = out.join(format!("{}.pol", args.name));
    files::write(&pol_path, &encoded.bytes)?;

    let m = &proof.meta;
    let weight_bytes = m.param_count() * m.precision.bytes_per_value();
    let predicted = proof_size_bytes(m.epochs, m.steps_per_epoch, m.k, weight_bytes)?;
    println!("proof: {}", pol_path.display());
    println!("proof_hash: {}", hex::encode(encoded.digest));
    println!("steps: {}", proof.total_steps());
    println!("checkpoints: {}", proof.checkpoint_steps().len());
    println!("file_bytes: {}", encoded.bytes.len());
    println!("checkpoint_payload_bytes: {}", encoded.sections.checkpoint_payload);
    println!("predicted_payload_bytes: {predicted}");

    if let Some(dir) = &args.keys {
        let dir = files::resolve(out, dir);
        let prover = files::keypair(&dir, PROVER_KEY)?;
        let verifier = files::public_keys(&dir, VERIFIER_PUB)?;
        let sealed = seal(proof, &verifier, &prover, &args.prover_id, files::unix_now(), &mut OsRng);
        let env_path = out.join(format!("{}.envelope", args.name));
        files::write(&env_path, &sealed.envelope)?;
        files::write(&env_path.with_extension("sig"), sealed.sig_file_bytes())?;
        println!("sealed: {}", env_path.display());
    }
    Ok(ExitCode::SUCCESS)
}
