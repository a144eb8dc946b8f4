//! `hyperlat`: batch front end for resolvent probing, comb construction,
//! contour integration and the certification pipeline.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use failure::Failure;
use output::OutputDir;

const DEFAULT_OUT: &str = "hyperlat-out";

#[derive(Debug, Parser)]
#[command(name = "hyperlat", version, about = "Contour-integral certification of hyperinvariant subspace lattices")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Quadrature tolerance.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Verb {
    /// Sample resolvent norms over the sectors and fit growth laws on their edge rays.
    Probe,
    /// Build and validate the combs of every sector.
    Comb,
    /// Densify one contour integral and check its identities.
    Integrate,
    /// Run the full pipeline and write the certificate.
    Certify,
    /// Run the invariant suite of every module.
    Selftest,
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let overrides = Overrides { seed: cli.seed, tol: cli.tol };
    if let Verb::Selftest = cli.verb {
        let seed = match &cli.config {
            Some(path) => RunConfig::load(path, overrides)?.seed,
            None => cli.seed.unwrap_or(config::DEFAULT_SEED),
        };
        let out = OutputDir::acquire(cli.out.as_deref().unwrap_or(DEFAULT_OUT.as_ref()))?;
        let (code, summary) = commands::selftest(seed, &out)?;
        for check in summary.failures() {
            eprintln!(
                "selftest: {} / {} failed: {:?} (limit {:e})",
                check.module,
                check.name,
                check.error.as_ref().map_or_else(|| format!("{:e}", check.value.unwrap_or(f64::NAN)), Clone::clone),
                check.limit
            );
        }
        println!(
            "selftest seed {seed}: {} of {} checks passed",
            summary.checks.len() - summary.failures().count(),
            summary.checks.len()
        );
        return Ok(code);
    }
    let path =
        cli.config.as_ref().ok_or_else(|| Failure::Config("`--config PATH` is required for this verb".into()))?;
    let config = RunConfig::load(path, overrides)?;
    let root = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let out = OutputDir::acquire(&root)?;
    out.write_json("config.json", &config)?;
    match cli.verb {
        Verb::Probe => commands::probe(&config, &out),
        Verb::Comb => commands::comb(&config, &out),
        Verb::Integrate => commands::integrate(&config, &out),
        Verb::Certify => {
            let (code, cert) = commands::certify(&config, &out)?;
            let detail = match (&cert.verdict.stage, &cert.verdict.reason) {
                (Some(stage), Some(reason)) => format!(" at {stage}: {reason}"),
                (None, Some(reason)) => format!(": {reason}"),
                _ => String::new(),
            };
            println!("verdict {}{detail} (seed {})", cert.verdict.kind.name(), config.seed);
            Ok(code)
        }
        Verb::Selftest => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
