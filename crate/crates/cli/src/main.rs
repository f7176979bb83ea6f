//! `pol`: create, seal, verify and attack proof-of-learning transcripts.

mod bench;
mod config;
mod files;
mod keys;
mod ledger;
mod prove;
mod spoof;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::RunConfig;

/// Exit status for a proof that was checked and rejected.
pub const EXIT_REJECTED: u8 = 2;
/// Exit status for malformed input, bad keys or configuration.
pub const EXIT_ERROR: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pol", version, about = "Proof-of-learning toolkit for small MLPs")]
struct Cli {
    /// Directory for every file the command writes
    #[arg(long, global = true, env = "POL_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write its proof
    Prove(prove::ProveArgs),
    /// Check a proof; exits 0 on success, 2 on rejection, 3 on bad input
    Verify(verify::VerifyArgs),
    /// Run an attack against an honest proof and report the outcome
    Spoof(spoof::SpoofArgs),
    /// Produce one of the experiment tables as CSV
    Bench(bench::BenchArgs),
    /// Record verification outcomes or look them up
    #[command(subcommand)]
    Ledger(ledger::LedgerCommand),
    #[command(subcommand)]
    Keys(keys::KeysCommand),
}

fn defaults_help() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        format!(
            "Configuration defaults (override with --config FILE; unknown keys are errors):\n\n{}",
            RunConfig::default().to_toml()
        )
    })
}

fn main() -> ExitCode {
    let matches = match Cli::command().after_long_help(defaults_help()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let out = cli.out_dir.as_path();
    let res = match cli.command {
        Command::Prove(a) => prove::run(a, out),
        Command::Verify(a) => verify::run(a, out),
        Command::Spoof(a) => spoof::run(a, out),
        Command::Bench(a) => bench::run(a, out),
        Command::Ledger(c) => ledger::run(c, out),
        Command::Keys(c) => keys::run(c, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
