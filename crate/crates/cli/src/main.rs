//! `stein-chaos` command-line tool.
//!
//! Exit status: 0 on success, 1 on input or usage errors, 2 when a checked
//! bound or identity fails.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{BoundCommand, ChaosCommand, Cli, Command, SteinEqCommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] stein_chaos::Error),
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    match &cli.command {
        Command::SteinEq(SteinEqCommand::Eval(a)) => commands::stein_eval(a),
        Command::SteinEq(SteinEqCommand::VerifyConstants(a)) | Command::VerifyConstants(a) => commands::verify(a),
        Command::Distance(a) => commands::distance(a),
        Command::Bound(BoundCommand::IndepSum(a)) => commands::bound_indep(a),
        Command::Bound(BoundCommand::GaussianFunctional(a)) => commands::bound_gaussian(a),
        Command::Bound(BoundCommand::Chaos(a)) => commands::bound_chaos(a),
        Command::Chaos(ChaosCommand::Check(a)) => commands::chaos_check(a),
        Command::EmitCurve(a) => commands::curve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if outcome.assertion_failed {
        eprintln!("assertion failed: a bound or identity check did not hold (see report)");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
