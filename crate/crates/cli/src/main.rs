use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qrisk_core::io::{emit_report, parse_instance, run_command, Command, Format, RunError};

#[derive(Parser)]
#[command(name = "qrisk", version, about = "Quasiconvex systemic risk on finite probability spaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eisenberg-Noe clearing payments per scenario.
    Clear(Args),
    /// Primal risk ρ(Λ(X)).
    Evaluate(Args),
    /// Composition penalty at the query's (x*, m).
    Penalty(Args),
    /// Left inverse of the composition penalty at the query's (x*, s).
    LeftInverse(Args),
    /// Dual representation search and duality gap.
    Dual(Args),
    /// Minimax grid check and quasiconvexity probes.
    Verify(Args),
    /// Full property suite.
    Selftest(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long, value_name = "PATH")]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Fmt::Structured)]
    format: Fmt,
    /// Overrides `optimizer.seed` from the instance.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Record wall time in the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(ValueEnum, Clone, Copy)]
enum Fmt {
    Structured,
    Table,
}

fn split(cmd: Cmd) -> (Command, Args) {
    match cmd {
        Cmd::Clear(a) => (Command::Clear, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
        Cmd::Penalty(a) => (Command::Penalty, a),
        Cmd::LeftInverse(a) => (Command::LeftInverse, a),
        Cmd::Dual(a) => (Command::Dual, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Selftest(a) => (Command::Selftest, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = split(cli.command);
    let mut inst = match parse_instance(&args.instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        inst.optimizer.seed = seed;
    }
    let t0 = Instant::now();
    let mut rep = match run_command(cmd, &inst) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {} failed: {e}", cmd.name());
            return ExitCode::from(match e {
                RunError::Validation(_) => 1,
                RunError::Computation(_) => 2,
            });
        }
    };
    if args.timing {
        rep.wall_time_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
    }
    let format = match args.format {
        Fmt::Structured => Format::Structured,
        Fmt::Table => Format::Table,
    };
    let text = emit_report(&rep, format);
    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    let checked = matches!(cmd, Command::Verify | Command::Selftest);
    if checked && !rep.all_checks_pass() {
        for c in rep.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} ({})", c.name, c.detail);
        }
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
