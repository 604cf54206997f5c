//! Batch driver for the projection library: assembles a run configuration
//! from flags and/or a flat `key = value` config file, executes exactly one
//! experiment, and writes CSV/JSONL reports plus a `MANIFEST` into the
//! output directory.
//!
//! Exit status: 0 on success; 1 on usage errors (bad flags, unknown
//! commands or family names, missing required fields); 2 when the
//! experiment ran but a checked invariant failed — the violation is named
//! both on stderr and in the run's summary report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use riproj::config::{parse_config, Command, GridSpec, RunConfig};
use riproj::Error;

mod runners;

/// Reverse-information-projection experiments over finite grids.
#[derive(Debug, Parser)]
#[command(name = "riproj", version)]
struct Cli {
    /// Experiment to run: project | gain | estat | strength | sequential |
    /// subprob | rate | epower (may come from the config file instead)
    command: Option<String>,

    /// Flat `key = value` config file; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Family descriptor, e.g. `gauss-pair` or `bernoulli:0.25:0.75:21`
    #[arg(long, value_name = "NAME")]
    family: Option<String>,

    /// Alternative (data) measure descriptor, e.g. `cauchy`
    #[arg(long, value_name = "NAME")]
    alt: Option<String>,

    /// Iteration budget for projections; batch length for simulations
    #[arg(long, value_name = "INT")]
    kmax: Option<usize>,

    /// Seed for every pseudo-random draw in the run
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory for reports
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Quadrature window LO:HI:NPTS (LO may be negative)
    #[arg(long, value_name = "LO:HI:NPTS", allow_hyphen_values = true)]
    grid: Option<String>,

    /// Counting-grid size for integer-supported experiments
    #[arg(long, value_name = "INT")]
    support: Option<u64>,

    /// Convergence tolerance for hull-gain ascents
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,

    /// Sub-experiment selector (rate: bernoulli | geometric;
    /// epower: bernoulli | gaussian)
    #[arg(long, value_name = "NAME")]
    experiment: Option<String>,
}

fn build_config(cli: Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => {
            let name = cli.command.as_deref().ok_or_else(|| {
                "no command given; pass one of project | gain | estat | strength | \
                 sequential | subprob | rate | epower, or --config PATH"
                    .to_string()
            })?;
            RunConfig::new(Command::parse(name).map_err(|e| e.to_string())?)
        }
    };
    if cli.config.is_some() {
        if let Some(name) = cli.command.as_deref() {
            cfg.command = Command::parse(name).map_err(|e| e.to_string())?;
        }
    }
    if let Some(v) = cli.family {
        cfg.family = Some(v);
    }
    if let Some(v) = cli.alt {
        cfg.alt = Some(v);
    }
    if let Some(v) = cli.kmax {
        cfg.kmax = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.out {
        cfg.out = v;
    }
    if let Some(v) = &cli.grid {
        cfg.grid = Some(GridSpec::parse(v).map_err(|e| e.to_string())?);
    }
    if let Some(v) = cli.support {
        cfg.support = Some(v);
    }
    if let Some(v) = cli.tol {
        cfg.tol = v;
    }
    if let Some(v) = cli.experiment {
        cfg.experiment = Some(v);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("usage error: {msg}");
            return ExitCode::from(1);
        }
    };
    match runners::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(runners::Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(runners::Failure::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            ExitCode::from(2)
        }
        Err(runners::Failure::Lib(e)) => match e {
            Error::UnknownFamily(_) | Error::ConfigParse { .. } => {
                eprintln!("usage error: {e}");
                ExitCode::from(1)
            }
            other => {
                eprintln!("error: {other}");
                ExitCode::from(2)
            }
        },
    }
}
