mod args;
mod commands;
mod output;
mod recipe;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fhn_core::dynamics::{MAX_TOL, MIN_TOL};

use args::{Cli, Command};
use output::{Failure, Outcome, Run};

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Singular(_) => "singular",
        Command::Simulate(_) => "simulate",
        Command::Bifurcate(_) => "bifurcate",
        Command::Canard(_) => "canard",
        Command::SlowManifold(_) => "slow-manifold",
        Command::Recipe(_) => "recipe",
    }
}

fn validate(cli: &Cli) -> Outcome {
    if !(MIN_TOL..=MAX_TOL).contains(&cli.tol) {
        return Err(Failure::Config(format!("--tol {} outside [{MIN_TOL:e}, {MAX_TOL:e}]", cli.tol)));
    }
    if cli.jobs == Some(0) {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    Ok(())
}

/// Runs one parsed command line and writes its manifest; returns the exit
/// code.
pub(crate) fn execute(cli: &Cli) -> i32 {
    let config = serde_json::to_value(cli).unwrap_or_default();
    let mut run = Run::new(&cli.out, cli.tol, command_name(&cli.command), config);
    let outcome = validate(cli).and_then(|_| match &cli.command {
        Command::Singular(a) => commands::singular(&mut run, a),
        Command::Simulate(a) => commands::simulate(&mut run, a),
        Command::Bifurcate(a) => commands::bifurcate(&mut run, a),
        Command::Canard(a) => commands::canard(&mut run, a),
        Command::SlowManifold(a) => commands::slow_manifold(&mut run, a),
        Command::Recipe(a) => recipe::run_recipe(&mut run, cli, a),
    });
    run.finish(&outcome)
}

// Best effort for command lines clap rejects: the manifest still goes to
// the requested output directory.
fn raw_out(args: &[String]) -> PathBuf {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            if let Some(v) = it.next() {
                return PathBuf::from(v);
            }
        } else if let Some(v) = a.strip_prefix("--out=") {
            return PathBuf::from(v);
        }
    }
    PathBuf::from("fhn-out")
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let run = Run::new(&raw_out(&argv), f64::NAN, "", serde_json::json!({ "argv": argv }));
            let code = run.finish(&Err(Failure::Config(e.kind().to_string())));
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.jobs {
        if n > 0 {
            // only fails if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    ExitCode::from(execute(&cli) as u8)
}
