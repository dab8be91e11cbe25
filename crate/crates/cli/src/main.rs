use branched_cli::{default_run_config, run, CliError};
use branched_core::io::{parse_resolutions, Command};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    KernelCheck,
    Solve,
    Fit,
    PCheck,
    DerivativeCheck,
    Newton,
    OracleCompare,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::KernelCheck => Command::KernelCheck,
            Cmd::Solve => Command::Solve,
            Cmd::Fit => Command::Fit,
            Cmd::PCheck => Command::PCheck,
            Cmd::DerivativeCheck => Command::DerivativeCheck,
            Cmd::Newton => Command::Newton,
            Cmd::OracleCompare => Command::OracleCompare,
        }
    }
}

/// Numerical checks for branched harmonic functions.
#[derive(Debug, Parser)]
#[command(name = "branched", version)]
struct Args {
    command: Cmd,
    /// Input configuration (JSON); built-in default when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated grid spacings, e.g. 1/64,1/128.
    #[arg(long)]
    resolution: Option<String>,
    /// Run on one thread for bitwise-reproducible outputs.
    #[arg(long)]
    single_thread: bool,
    /// Override a tolerance, NAME=VALUE (repeatable).
    #[arg(long = "tol")]
    tol: Vec<String>,
    /// Seed of the random draws.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: Args) -> Result<bool, CliError> {
    let mut cfg = default_run_config(args.command.into());
    cfg.config = args.config;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(r) = &args.resolution {
        cfg.resolutions = parse_resolutions(r)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.single_thread = args.single_thread;
    cfg.override_tolerances(&args.tol)?;
    let manifest = run(&cfg)?;
    for a in &manifest.assertions {
        let status = if a.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<32} value {:.6e} tolerance {:.3e} {}", a.name, a.value, a.tolerance, a.detail);
    }
    println!("wrote {} files to {}", manifest.outputs.len() + 1, cfg.out.display());
    Ok(manifest.all_passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
