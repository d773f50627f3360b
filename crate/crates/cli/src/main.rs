mod experiment;
mod plot;
mod serve;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdmsim::{load_config, Config, ManagerKind, ScenarioId};

pub const CONFIG_ENV: &str = "RDMSIM_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "rdmsim", version, about = "Remote data mirroring simulator for self-adaptive managers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch of simulations (scenarios x seeds) with a bundled manager.
    Run(RunArgs),
    /// Convert a trace CSV into long-format plot data.
    PlotData(PlotArgs),
    /// Serve simulations to external managing systems over the line protocol.
    Serve(ServeArgs),
    /// Print the default configuration file.
    DefaultConfig,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Configuration file; defaults are used when absent.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Scenario(s) to run, e.g. `S1` or `S0,S1`. Overrides the configuration.
    #[arg(long, value_delimiter = ',', value_parser = parse_scenario)]
    scenario: Vec<ScenarioId>,
    /// Seed(s): single values, comma lists, or half-open ranges like `0..30`.
    #[arg(long, value_delimiter = ',', value_parser = parse_seeds)]
    seed: Vec<SeedSpec>,
    /// Number of timesteps per run. Overrides the configuration.
    #[arg(long)]
    timesteps: Option<u32>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Bundled manager: `null`, `random` or `threshold`.
    #[arg(long, default_value = "null", value_parser = parse_manager)]
    manager: ManagerKind,
    /// Output directory for traces, summaries and the roll-up table.
    #[arg(long, default_value = "rdmsim-out")]
    out: PathBuf,
    /// Per-run artifacts to write. The roll-up table is always written.
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<OutputFormat>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Trace CSV written by `rdmsim run`.
    #[arg(long)]
    trace: PathBuf,
    /// Configuration providing the thresholds; defaults are used when absent.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Address to listen on, e.g. 127.0.0.1:7070.
    #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
    listen: Option<String>,
    /// Serve a single session on standard input and output.
    #[arg(long)]
    stdio: bool,
    /// Stop after this many sessions.
    #[arg(long)]
    sessions: Option<usize>,
    /// Directory for per-session traces and summaries.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Per-run trace CSV.
    Csv,
    /// Per-run summary and command log JSON.
    Json,
}

#[derive(Debug, Clone)]
pub enum SeedSpec {
    One(u64),
    Range(u64, u64),
}

fn parse_scenario(s: &str) -> Result<ScenarioId, String> {
    s.parse().map_err(|e: rdmsim::scenario::ScenarioError| e.to_string())
}

fn parse_manager(s: &str) -> Result<ManagerKind, String> {
    s.parse().map_err(|e: rdmsim::ManagerError| e.to_string())
}

fn parse_seeds(s: &str) -> Result<SeedSpec, String> {
    let num = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("bad seed {v:?}: {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo >= hi {
                return Err(format!("empty seed range {s}"));
            }
            Ok(SeedSpec::Range(lo, hi))
        }
        None => Ok(SeedSpec::One(num(s)?)),
    }
}

impl ExperimentArgs {
    fn base_config(&self) -> Result<Config, CliError> {
        let mut config = match &self.config {
            Some(path) => load_config(path).map_err(CliError::config)?,
            None => Config::default(),
        };
        if let Some(t) = self.timesteps {
            config.properties.timesteps = t;
        }
        config.validate().map_err(CliError::config)?;
        Ok(config)
    }

    fn scenarios(&self, config: &Config) -> Vec<ScenarioId> {
        if self.scenario.is_empty() {
            vec![config.properties.scenario]
        } else {
            self.scenario.clone()
        }
    }

    fn seeds(&self, config: &Config) -> Vec<u64> {
        if self.seed.is_empty() {
            return vec![config.properties.seed];
        }
        self.seed
            .iter()
            .flat_map(|s| match *s {
                SeedSpec::One(v) => v..v + 1,
                SeedSpec::Range(lo, hi) => lo..hi,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Manager,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    error: anyhow::Error,
}

impl CliError {
    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            error: e.into(),
        }
    }

    pub fn manager(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ErrorKind::Manager,
            error: e.into(),
        }
    }

    pub fn io(e: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ErrorKind::Io,
            error: e.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Manager => 3,
            ErrorKind::Io => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Config => "configuration error",
            ErrorKind::Manager => "manager error",
            ErrorKind::Io => "I/O error",
        };
        write!(f, "{kind}: {:#}", self.error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => experiment::run(&args),
        Command::PlotData(args) => plot::run(&args),
        Command::Serve(args) => serve::run(&args),
        Command::DefaultConfig => {
            println!("{:#}", Config::default().to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rdmsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
