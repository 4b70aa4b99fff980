use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use solvrigid::config::RunConfig;
use solvrigid::run::{run, Command};
use solvrigid::Error;

#[derive(Parser)]
#[command(name = "solvrigid", version, about = "Run property suites and write a JSON report")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boundary quasimetric axioms and chain energies.
    Metric(Common),
    /// Pair-to-point map, height isometries and the group law.
    Geodesic(Common),
    /// Map classification, reciprocity and homomorphisms.
    Classify(Common),
    /// Conformal classes, circumcenters and invariant structures.
    Conformal(Common),
    /// Conjugation pipelines.
    Conjugate(Common),
    /// Root extraction for almost translations.
    Roots(Common),
    /// Every suite above.
    All(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.cmd {
        Cmd::Metric(c) => (Command::Metric, c),
        Cmd::Geodesic(c) => (Command::Geodesic, c),
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::Conformal(c) => (Command::Conformal, c),
        Cmd::Conjugate(c) => (Command::Conjugate, c),
        Cmd::Roots(c) => (Command::Roots, c),
        Cmd::All(c) => (Command::All, c),
    };
    let level = if common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut cfg = match RunConfig::from_path(&common.config) {
        Ok(c) => c,
        Err(Error::Config { path, message }) => {
            eprintln!("error: invalid config {}: at `{path}`: {message}", common.config.display());
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let report = run(command, &cfg);
    match report.write(&common.out) {
        Ok(path) => println!("{}", path.display()),
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(3);
        }
    }
    for s in &report.sections {
        for inv in s.invariants.iter().filter(|i| !i.pass) {
            eprintln!("FAIL {}::{}", s.name, inv.name);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
