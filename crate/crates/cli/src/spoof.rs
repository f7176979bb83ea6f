use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, ValueEnum};
use pol_core::proof::encode_proof;
use pol_core::spoof::{
    concat_spoof, directed_regularizer_demo, inverse_gradient_spoof, retrain_spoof, ConcatParams,
    Decoys, InverseParams, Judge, Solver,
};

use crate::config::Overrides;
use crate::files;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AttackKind {
    /// Retrain with the victim's seeds but fresh noise, claim its weights
    Retrain,
    /// Train briefly, splice in the victim's weights, fine-tune
    Concat,
    /// Run SGD backwards from the victim's weights
    Inverse,
    /// Train towards the victim's weights under a hidden regularizer
    Regularizer,
}

#[derive(Debug, Args)]
pub struct SpoofArgs {
    pub attack: AttackKind,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Honest proof to attack (.pol); trained from the config when absent
    #[arg(long, value_name = "PROOF")]
    pub victim: Option<PathBuf>,
    /// Base name for NAME.csv (report) and NAME.pol (forged proof)
    #[arg(long, default_value = "spoof")]
    pub name: String,
}

pub fn run(args: SpoofArgs, out: &Path) -> Result<ExitCode> {
    let cfg = args.overrides.load()?;
    let desk = cfg.desk()?;
    let config = cfg.verification()?;
    let seed = cfg.train.seed;
    let victim = match &args.victim {
        Some(p) => files::read_plain(p)?,
        None => desk.prove(seed, cfg.train.k)?.proof,
    };
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: desk.reference_distance(seed, config.d2)?,
    };
    let a = &cfg.attack;
    let adv = desk.hyper(seed.wrapping_add(a.seed_offset));
    let target = &victim.final_weights;
    let (forged, report) = match args.attack {
        AttackKind::Retrain => {
            let hyper = desk.hyper(seed);
            let mut params = desk.prove_params(&hyper, cfg.train.k)?;
            params.noise_seed ^= a.seed_offset;
            retrain_spoof(&victim, &desk.arch, &desk.dataset, &hyper, &params, &judge)?
        }
        AttackKind::Concat => {
            let s = desk.steps_per_epoch();
            let params = ConcatParams {
                fresh_steps: desk.cfg.epochs.saturating_sub(a.fine_tune_epochs) * s,
                fine_tune_epochs: a.fine_tune_epochs,
                prove: desk.prove_params(&adv, cfg.train.k)?,
                decoys: (a.decoys_per_epoch > 0).then_some(Decoys {
                    per_epoch: a.decoys_per_epoch,
                    eta: a.decoy_eta,
                }),
            };
            concat_spoof(target, &desk.arch, &desk.dataset, &adv, &params, &judge)?
        }
        AttackKind::Inverse => {
            let params = InverseParams {
                steps_back: a.steps_back,
                k: cfg.train.k,
                solver: Solver::from_name(&a.solver)?,
                tol: a.tol,
                max_iters: a.max_iters,
                precision: desk.cfg.precision,
            };
            inverse_gradient_spoof(target, &desk.arch, &desk.dataset, &adv, &params, &judge)?
        }
        AttackKind::Regularizer => {
            let params = desk.prove_params(&adv, cfg.train.k)?;
            directed_regularizer_demo(target, &desk.arch, &desk.dataset, &adv, &params, a.lambda, &judge)?
        }
    };
    let csv_path = out.join(format!("{}.csv", args.name));
    let pol_path = out.join(format!("{}.pol", args.name));
    files::write(&csv_path, report.to_csv()?)?;
    files::write(&pol_path, encode_proof(&forged).bytes)?;
    print!("{}", report.to_text());
    println!("report: {}", csv_path.display());
    println!("forged_proof: {}", pol_path.display());
    Ok(ExitCode::SUCCESS)
}
