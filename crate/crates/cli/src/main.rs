//! `comwalk`: reproducible experiments on the centre of mass of lattice walks.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
//! configuration errors.

mod commands;
mod options;

use clap::{Parser, Subcommand};
use commands::Outcome;
use options::{ConfigError, Opts};
use serde_json::{json, Value};
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "comwalk", version, about = "Experiments on the centre of mass of lattice random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a basis carries the law and is minimal
    LatticeVerify(#[command(flatten)] Opts),
    /// Exact local limit error over a list of horizons
    Lclt(#[command(flatten)] Opts),
    /// Monte Carlo cell frequencies against the stable local limit
    Slclt(#[command(flatten)] Opts),
    /// Escape exponent of the centre of mass in d >= 2
    Escape(#[command(flatten)] Opts),
    /// Sign changes and proximity statistics in d = 1
    Recur(#[command(flatten)] Opts),
    /// Gaussian limit of the scaled centre of mass
    Clt(#[command(flatten)] Opts),
    /// Frequency-region integrals of the characteristic function
    Diag(#[command(flatten)] Opts),
}

impl Command {
    fn split(self) -> (&'static str, Opts) {
        match self {
            Command::LatticeVerify(o) => ("lattice-verify", o),
            Command::Lclt(o) => ("lclt", o),
            Command::Slclt(o) => ("slclt", o),
            Command::Escape(o) => ("escape", o),
            Command::Recur(o) => ("recur", o),
            Command::Clt(o) => ("clt", o),
            Command::Diag(o) => ("diag", o),
        }
    }
}

fn run(name: &str, opts: &Opts, out: &Path) -> Result<Outcome, ConfigError> {
    match name {
        "lattice-verify" => commands::lattice_verify(opts),
        "lclt" => commands::lclt(opts, out),
        "slclt" => commands::slclt(opts, out),
        "escape" => commands::escape(opts, out),
        "recur" => commands::recur(opts, out),
        "clt" => commands::clt(opts),
        "diag" => commands::diag(opts, out),
        _ => unreachable!("unknown command {name}"),
    }
}

fn execute(name: &str, opts: Opts) -> Result<bool, ConfigError> {
    let opts = opts.resolve()?;
    if let Some(w) = opts.workers {
        if w == 0 {
            return Err(ConfigError("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w as usize).build_global()?;
    }
    let out = opts.out_dir();
    std::fs::create_dir_all(&out)
        .map_err(|e| ConfigError(format!("cannot create output directory {}: {e}", out.display())))?;
    let outcome = run(name, &opts, &out)?;
    let passed = outcome.checks.iter().all(|c| c.passed);
    let generated_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let envelope = json!({
        "schema_version": SCHEMA_VERSION,
        "generated_at_unix": generated_at,
        "command": name,
        "config": Value::Object(outcome.config),
        "result": outcome.result,
        "checks": outcome.checks,
        "passed": passed,
    });
    let file = name.replace('-', "_") + ".json";
    let text = serde_json::to_string_pretty(&envelope)? + "\n";
    std::fs::write(out.join(&file), text)?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", out.join(file).display());
    Ok(passed)
}

fn main() -> ExitCode {
    let (name, opts) = Cli::parse().command.split();
    match execute(name, opts) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
