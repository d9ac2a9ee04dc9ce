//! `randwave`: batch front end for the randomized-data wave laboratory.
//!
//! Every run writes its artifacts, `config.resolved.toml` and a
//! `manifest.json` into the output directory. Exit status is 0 when the
//! run passed, 2 when an experiment missed its band or a solve did not
//! succeed, and 1 on error.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::{Deserialize, Serialize};

use randwave::random::RandomSpec;

use crate::commands::{Command, Outcome};
use crate::config::Config;
use crate::output::{Artifact, Format, Outputs};

pub type Result<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(
    name = "randwave",
    version,
    about = "Randomized data for the defocusing power-type wave equation on a torus"
)]
struct Cli {
    /// TOML config, or a manifest.json whose resolved config is reused.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the randomization seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo work (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true, env = "RANDWAVE_OUT", default_value = "randwave-out")]
    out: PathBuf,
    /// Report formats [default: both; a rerun keeps the recorded one].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: Command,
    format: Format,
    seed: u64,
    /// Exact TOML the run was driven by; `--config manifest.json` and
    /// `rerun` read this field.
    resolved_config: String,
    config: Config,
    spec: RandomSpec,
    inputs: Vec<Artifact>,
    outputs: Vec<Artifact>,
    wall_clock_s: f64,
    status: String,
    passed: bool,
    error: Option<String>,
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| format!("{}: not a run manifest: {e}", path.display()).into())
}

/// Runs the command; `Ok(passed)` once the manifest is written.
fn execute(cli: Cli) -> Result<bool> {
    let (command, mut cfg, format, mut inputs) = match &cli.command {
        Command::Rerun { manifest } => {
            let m = load_manifest(manifest)?;
            let cfg = Config::parse(&m.resolved_config)?;
            (
                m.command,
                cfg,
                cli.format.unwrap_or(m.format),
                vec![Artifact::of_file(manifest)?],
            )
        }
        c => {
            let (cfg, inputs) = match &cli.config {
                Some(p) => (Config::load(p)?, vec![Artifact::of_file(p)?]),
                None => (Config::default(), Vec::new()),
            };
            (c.clone(), cfg, cli.format.unwrap_or(Format::Both), inputs)
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    let mut out = Outputs::create(&cli.out, format)?;
    let resolved = cfg.to_toml()?;
    out.write("config.resolved.toml", resolved.as_bytes())?;

    let start = Instant::now();
    let result = pool.install(|| commands::run(&command, &cfg, &mut out));
    let wall_clock_s = start.elapsed().as_secs_f64();
    let (outcome, error) = match result {
        Ok((outcome, files)) => {
            for f in files {
                inputs.push(Artifact::of_file(&f)?);
            }
            (outcome, None)
        }
        Err(e) => (
            Outcome {
                passed: false,
                status: "error".into(),
            },
            Some(e),
        ),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        format,
        seed: cfg.seed,
        resolved_config: resolved,
        spec: cfg.spec(),
        config: cfg,
        inputs,
        outputs: out.artifacts().to_vec(),
        wall_clock_s,
        status: outcome.status.clone(),
        passed: outcome.passed,
        error: error.as_ref().map(|e| e.to_string()),
    };
    let bytes = output::to_json(&manifest)?;
    std::fs::write(out.dir().join("manifest.json"), bytes)?;
    match error {
        Some(e) => Err(e),
        None => {
            eprintln!("{}: {}", out.dir().display(), outcome.status);
            Ok(outcome.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
