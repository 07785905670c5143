//! The `framekit` experiment harness: TOML config in, CSV table plus JSON
//! sidecar out.

mod clouds;
mod config;
mod corpus;
mod graphs;
mod regress;
mod table;

pub use clouds::{cmd_spacing, cmd_stability, normalize_cloud};
pub use config::{
    CorpusConfig, EnumerateConfig, ExperimentConfig, InverrConfig, RegressConfig, SeparateConfig, SeparationModel,
    SpacingConfig, StabilityConfig,
};
pub use corpus::{cmd_enumerate, load_corpus};
pub use graphs::{cmd_frame_stats, cmd_inverr, cmd_separate};
pub use regress::{cmd_regress, dynamics_sample};
pub use table::{summarize, ResultTable, Value};

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Corpus(_) => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "framekit", version, about = "Frame averaging experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count graph pairs that random FA/GA/raw models fail to separate.
    Separate(RunArgs),
    /// Invariance error of sampled FA and GA for growing sample sizes.
    Inverr(RunArgs),
    /// Frame size, automorphism count and distinct-summand counts per graph.
    FrameStats(RunArgs),
    /// Histogram of the minimal normalized PCA eigenvalue spacing.
    Spacing(RunArgs),
    /// Distance between PCA frames of clean and noisy clouds.
    Stability(RunArgs),
    /// Train an FA message-passing model on a toy one-step dynamics task.
    Regress(RunArgs),
    /// Write every connected graph on `enumerate.nodes` nodes as graph6.
    Enumerate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Separate(_) => "separate",
            Command::Inverr(_) => "inverr",
            Command::FrameStats(_) => "frame-stats",
            Command::Spacing(_) => "spacing",
            Command::Stability(_) => "stability",
            Command::Regress(_) => "regress",
            Command::Enumerate(_) => "enumerate",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Separate(a)
            | Command::Inverr(a)
            | Command::FrameStats(a)
            | Command::Spacing(a)
            | Command::Stability(a)
            | Command::Regress(a)
            | Command::Enumerate(a) => a,
        }
    }
}

fn default_output(name: &str) -> PathBuf {
    let ext = if name == "enumerate" { "g6" } else { "csv" };
    PathBuf::from(format!("{name}.{ext}"))
}

/// Loads the config, runs one subcommand and writes its outputs. Returns the
/// path of the main output file.
pub fn execute(command: &Command) -> Result<PathBuf, CliError> {
    let args = command.args();
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| default_output(command.name()));
    run_to(command.name(), &config, &out)
}

/// Runs a subcommand by name against an in-memory config.
pub fn run_to(name: &str, config: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let start = Instant::now();
    let table = match name {
        "separate" => cmd_separate(config)?,
        "inverr" => cmd_inverr(config)?,
        "frame-stats" => cmd_frame_stats(config)?,
        "spacing" => cmd_spacing(config)?,
        "stability" => cmd_stability(config)?,
        "regress" => cmd_regress(config)?,
        "enumerate" => {
            let (lines, table) = cmd_enumerate(config)?;
            table::write_file(out, lines.as_bytes())?;
            let sidecar = out.with_extension("json");
            let doc = table.sidecar(name, config, start.elapsed().as_secs_f64());
            let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            table::write_file(&sidecar, format!("{text}\n").as_bytes())?;
            println!("{}", table.rows().len());
            return Ok(out.to_path_buf());
        }
        other => return Err(CliError::Config(format!("unknown subcommand {other}"))),
    };
    table.write(out, name, config, start.elapsed().as_secs_f64())?;
    Ok(out.to_path_buf())
}

/// Entry point of the binary.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(&cli.command) {
        Ok(path) => {
            eprintln!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("framekit {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
