//! Experiment harness: configuration, repeated runs, parameter sweeps and
//! their CSV outputs.

mod config;
mod run;
mod schedule;
mod sweep;

pub use config::{us, ExperimentConfig, QdiscKind};
pub use run::{mean_stats, run_experiment, summarize, write_outputs, ExperimentResult, MeanStats};
pub use schedule::{build_taprio_schedule, BE_MASK, PRIO_MASK};
pub use sweep::{run_sweep, sweep_points, SweepName, SweepPoint, SweepTable};

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::metrics::MetricsError;
use crate::sim::{NoisePreset, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tsnlab", version, about = "OPC UA PubSub over Linux TSN qdiscs, simulated")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Base seed; repetition i uses seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for summary, ECDF, table and trace files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Scheduling-noise preset: none, e3 or d.
    #[arg(long, global = true, value_parser = parse_noise)]
    pub noise: Option<NoisePreset>,
    /// Write every tap timestamp to trace.jsonl.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Override a config key, e.g. `--set packets=10000`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration for all repetitions.
    Run { config: PathBuf },
    /// Run a parameter sweep around a configuration.
    Sweep {
        #[arg(value_enum)]
        name: SweepName,
        config: PathBuf,
    },
}

fn parse_noise(s: &str) -> Result<NoisePreset, String> {
    NoisePreset::parse(s).ok_or_else(|| format!("unknown noise preset {s:?}, use none, e3 or d"))
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the config file and applies the command-line overrides.
pub fn load_config(cli: &Cli, path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    for o in &cli.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: o.clone(),
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(noise) = cli.noise {
        cfg.noise = noise;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir).map_err(io_err(&cli.out_dir))?;
    match &cli.command {
        Command::Run { config } => {
            let cfg = load_config(cli, config)?;
            for w in cfg.validate()? {
                eprintln!("warning: {w}");
            }
            let result = run_experiment(&cfg, cli.trace)?;
            write_outputs(&cli.out_dir, std::slice::from_ref(&result), cli.trace)?;
            let m = mean_stats(&result.rows);
            println!(
                "{} {}: d_sigma {:.4}% rtt {:.1} us jitter {:.3} us over {} repetitions",
                result.config.topology.name(),
                result.config.host_qdisc.name(),
                m.d_sigma,
                m.rtt_us.unwrap_or(f64::NAN),
                m.jitter_us.unwrap_or(f64::NAN),
                result.rows.len()
            );
        }
        Command::Sweep { name, config } => {
            let cfg = load_config(cli, config)?;
            let table = run_sweep(*name, &cfg, cli.trace)?;
            table.write(&cli.out_dir)?;
            write_outputs(&cli.out_dir, &table.results, cli.trace)?;
            println!("{}", table.render());
        }
    }
    Ok(())
}
