use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compref_cli::commands;
use compref_cli::{CliError, RunConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "compref", version, about = "Compositional specification-guided abstraction refinement")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Refine every subsystem and write partitions, controllers and a report.
    Synthesize(Common),
    /// Run closed-loop trials with the synthesized controller.
    Simulate(Common),
    /// Check feedback refinement, nonblocking and the partition laws.
    Verify(Common),
    /// Tabulate reach-set evaluation counts of the four abstraction strategies.
    Stats(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario, e.g. `ufad8`.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = Some(s.clone());
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn run(verb: &Verb) -> Result<(), CliError> {
    match verb {
        Verb::Synthesize(c) => {
            let report = commands::synthesize(&c.config()?)?;
            for s in &report.subsystems {
                println!(
                    "{}: {} refinements, depth {}, {} valid initial symbols, {} evaluations",
                    s.name, s.refinements, s.depth, s.valid[0], s.evaluations
                );
            }
            println!("total evaluations: {}", report.total_evaluations);
        }
        Verb::Simulate(c) => {
            let report = commands::simulate(&c.config()?)?;
            println!("{}/{} trials satisfied ({} rejected starts)", report.satisfied, report.trials, report.rejected_starts);
        }
        Verb::Verify(c) => {
            let report = commands::verify(&c.config()?)?;
            println!(
                "feedback: {} samples, {} violations; nonblocking: {} symbols checked; partition laws passed",
                report.feedback.samples, report.feedback.violations, report.nonblocking.checked
            );
        }
        Verb::Stats(c) => {
            let report = commands::stats(&c.config()?)?;
            for t in &report.tables {
                println!("depth {} ({} intervals/dim):", t.finest_depth, t.intervals_per_dim);
                for r in &t.rows {
                    let value = r.evaluations.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
                    let flag = if r.analytic { " (analytic)" } else { "" };
                    println!("  {:<26} {value}{flag}", r.strategy);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
