//! Command-line driver for `endohyp`: reads a `key = value` config, runs one
//! analysis and writes `report.json` plus CSV or PGM files into an output
//! directory.

pub mod config;
pub mod render;
pub mod report;
pub mod run;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{ConfigError, Origin, RawConfig, RunConfig};
use run::RunError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "endohyp", version, about = "Spectral analysis of noninvertible hyperbolic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration, one `key = value` per line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub depth: Option<String>,
    /// Comma separated list of scales.
    #[arg(long, global = true)]
    pub eps: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Forward orbit of `point` as CSV.
    Orbit,
    /// Preimage tree of `point` down to `tree_depth` as CSV.
    Preimages,
    /// Basic sets with their types, plus one image per set.
    Spectral,
    /// Attractor and repeller verdicts with expansion, purity and smoothness evidence.
    Classify,
    /// Metric and derivative expansion rates per basic set.
    VerifyExpanding,
    /// Evidence for the Axiom A conditions.
    AxiomA,
    /// Images of the cell sets, optionally with basins of attraction.
    Render,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Preimages => "preimages",
            Command::Spectral => "spectral",
            Command::Classify => "classify",
            Command::VerifyExpanding => "verify-expanding",
            Command::AxiomA => "axiom-a",
            Command::Render => "render",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                origin: Origin::Flag,
                key: "config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for (key, value) in [("seed", &cli.seed), ("grid", &cli.grid), ("depth", &cli.depth), ("eps", &cli.eps)] {
        if let Some(v) = value {
            raw.set_flag(key, v.clone());
        }
    }
    if cli.threads == Some(0) {
        return Err(ConfigError {
            origin: Origin::Flag,
            key: "threads".into(),
            message: "must be at least 1".into(),
        });
    }
    RunConfig::from_raw(&raw)
}

/// Run the command line and return the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = cli.threads {
        // only fails when a global pool exists already, which then stays in use
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let result = run::run(cli.command, &cfg).and_then(|out| out.write(&cli.out));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            eprintln!("{} finished in {:.2} s", cli.command.name(), start.elapsed().as_secs_f64());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Budget(_) => EXIT_BUDGET,
                RunError::Render(render::RenderError::UnsupportedManifold(_)) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            }
        }
    }
}
