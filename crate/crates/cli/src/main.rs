use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vegpattern_cli::{execute, Command, RunConfig};

/// Equilibria, bifurcation scans, Turing analysis and simulations of the
/// water-vegetation model. Results are written as CSV (and JSON for reports).
#[derive(Parser)]
#[command(name = "vegpattern", version)]
struct Args {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set model.r=1.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(Some(&args.config), &args.set).and_then(|cfg| execute(args.command, &cfg, &args.out));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("{}: some cells were unresolved", args.command.name());
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
