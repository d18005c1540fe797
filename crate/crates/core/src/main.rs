use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rdpc::harness::{self, Command, ExitStatus, ExperimentConfig, HarnessError, Overrides};

/// Rate-distortion-perception coding experiments.
#[derive(Parser)]
#[command(name = "rdpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one rate-distortion-perception problem.
    Solve(Common),
    /// Solve over a threshold grid and write sweep.csv.
    Sweep(Common),
    /// Encode, write, read and decode a symbol sequence.
    Roundtrip(Common),
    /// Check the index entropy bound and exactness of channel simulation.
    #[command(name = "verify-thm1")]
    VerifyThm1(Common),
    /// Check the per-seed converse against the grid oracle.
    #[command(name = "verify-converse")]
    VerifyConverse(Common),
    /// Check the block-code rate bound and its trend in the block size.
    #[command(name = "verify-thm3")]
    VerifyThm3(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Candidate budget per encoded symbol.
    #[arg(long)]
    budget: Option<u64>,
}

fn execute(command: Command, args: &Common) -> Result<ExitStatus, HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    Overrides {
        seed: args.seed,
        trials: args.trials,
        budget: args.budget,
    }
    .apply(&mut cfg)?;
    let output = harness::run(command, &cfg)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| {
            // Commands whose product is a file write it to the working directory.
            matches!(command, Command::Sweep | Command::Roundtrip).then(|| PathBuf::from("."))
        });
    if let Some(dir) = dir {
        output.write_files(&dir)?;
    }
    let text = serde_json::to_string_pretty(&output.report).expect("JSON values always serialize");
    // A closed stdout must not turn a finished run into a failure.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(output.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Roundtrip(a) => (Command::Roundtrip, a),
        Cmd::VerifyThm1(a) => (Command::VerifyThm1, a),
        Cmd::VerifyConverse(a) => (Command::VerifyConverse, a),
        Cmd::VerifyThm3(a) => (Command::VerifyThm3, a),
    };
    let status = match execute(command, args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("rdpc {}: {e}", command.name());
            e.status
        }
    };
    ExitCode::from(status.code() as u8)
}
