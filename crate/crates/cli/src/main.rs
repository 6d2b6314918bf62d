use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mapfrag_cli::error::CliError;
use mapfrag_cli::{execute, Overrides};

/// Moments, simulation and fractal statistics for Markov additive processes
/// and multi-type self-similar fragmentations.
#[derive(Parser)]
#[command(name = "mapfrag", version)]
struct Args {
    /// JSON run configuration.
    config: String,
    /// Overrides mc.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.path.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match go(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn go(args: &Args) -> Result<ExitCode, CliError> {
    let doc = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config)))?;
    let ov = Overrides { seed: args.seed, workers: args.workers, out: args.out.clone() };
    let art = execute(&doc, &ov)?;
    match &art.path {
        Some(p) => std::fs::write(p, &art.bytes).map_err(|e| CliError::Io(format!("{p}: {e}")))?,
        None => std::io::stdout().write_all(&art.bytes).map_err(|e| CliError::Io(e.to_string()))?,
    }
    match art.failure {
        Some(f) => {
            let e = CliError::Validation(format!("failed checks: {f}"));
            eprintln!("{}", e.record());
            Ok(ExitCode::from(e.exit_code() as u8))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}
