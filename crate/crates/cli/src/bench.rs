use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, ValueEnum};
use pol_core::experiments::{
    cost_curve, default_k_grid, k_sweep, ks_steps, lr_sweep, storage_curve, to_csv_string,
};

use crate::config::Overrides;
use crate::files;

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Table {
    /// Reproduction error against checkpoint interval
    KSweep,
    /// Reproduction error against learning rate at one interval
    LrSweep,
    /// Per-layer KS results while training from a fresh init
    KsSteps,
    /// Verifier cost ratio and data transfer (formula only)
    CostCurve,
    /// Predicted and measured checkpoint storage
    StorageCurve,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub table: Table,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Number of training seeds, starting at the configured seed
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Checkpoint intervals (default: 1, S/4, S, 4S, E*S)
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<usize>,
    /// Learning rates for lr_sweep
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.1,1")]
    pub etas: Vec<f64>,
    /// Segments per epoch for cost_curve
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub qs: Vec<usize>,
    /// Training steps followed by ks_steps
    #[arg(long, default_value_t = 50)]
    pub max_steps: usize,
    /// Skip encoding real proofs in storage_curve
    #[arg(long)]
    pub formula_only: bool,
    /// Write the CSV here (relative to --out-dir) instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: BenchArgs, out: &Path) -> Result<ExitCode> {
    let cfg = args.overrides.load()?;
    let desk = cfg.desk()?;
    let verify = cfg.verification()?;
    let s = desk.steps_per_epoch();
    let e = desk.cfg.epochs;
    let first = cfg.train.seed;
    let seeds: Vec<u64> = (first..first + args.seeds).collect();
    let ks = if args.ks.is_empty() {
        default_k_grid(s, e)
    } else {
        args.ks.clone()
    };
    let csv = match args.table {
        Table::KSweep => to_csv_string(&k_sweep(&desk, &ks, &seeds, verify.d2)?)?,
        Table::LrSweep => {
            let k = args.ks.first().copied().unwrap_or(s);
            to_csv_string(&lr_sweep(&desk, &args.etas, k, &seeds, verify.d2)?)?
        }
        Table::KsSteps => to_csv_string(&ks_steps(
            &desk,
            &seeds,
            args.max_steps,
            verify.alpha,
            verify.bonferroni,
        )?)?,
        Table::CostCurve => {
            to_csv_string(&cost_curve(e, s, &ks, &args.qs, desk.dataset.len())?)?
        }
        Table::StorageCurve => {
            to_csv_string(&storage_curve(&desk, &ks, first, !args.formula_only)?)?
        }
    };
    match &args.out {
        Some(p) => {
            let path = files::resolve(out, p);
            files::write(&path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
