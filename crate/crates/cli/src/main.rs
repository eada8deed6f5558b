use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser};
use thiserror::Error;

use monitor_lab::circuit::CircuitError;
use monitor_lab::haar::RandomStream;
use monitor_lab::learn::LearnError;
use monitor_lab::mincut::CutError;
use monitor_lab::qstate::StateError;
use monitor_lab::replica::ReplicaError;
use monitor_lab::statmech::StatMechError;

mod config;
mod experiments;
mod output;

use config::{Experiment, ExperimentConfig, Overrides};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("MONITOR_LAB_GIT_HASH"));

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("{0}")]
    Compute(String),
    #[error("invariant violated: {}", .0.join("; "))]
    Invariant(Vec<String>),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Compute(_) | CliError::Invariant(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::RegionTooLarge { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::State(s) => s.into(),
            CircuitError::TooManyMeasurements { .. } => CliError::Cap(e.to_string()),
            CircuitError::InvalidSpec(_) => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<ReplicaError> for CliError {
    fn from(e: ReplicaError) -> Self {
        match e {
            ReplicaError::ProjectorTooLarge { .. } => CliError::Cap(e.to_string()),
            ReplicaError::ReplicaCount(_) | ReplicaError::SingularGram { .. } => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<StatMechError> for CliError {
    fn from(e: StatMechError) -> Self {
        match e {
            StatMechError::Replica(r) => r.into(),
            StatMechError::StateSpaceTooLarge { .. } | StatMechError::TooManyLinks { .. } => CliError::Cap(e.to_string()),
            StatMechError::InvalidModel(_) => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<CutError> for CliError {
    fn from(e: CutError) -> Self {
        match e {
            CutError::BadRegion(_) => CliError::Config(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Circuit(c) => c.into(),
            LearnError::State(s) => s.into(),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

/// Random and monitored quantum circuit experiments.
#[derive(Debug, Parser)]
#[command(name = "monitor-lab", version = VERSION)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// Flat TOML file of parameters; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let overrides = Overrides { seed: cli.seed, workers: cli.workers, out: cli.out.clone() };
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let cfg = ExperimentConfig::from_toml(cli.experiment, &text, &overrides)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| CliError::Compute(e.to_string()))?;
    let root = RandomStream::new(cfg.seed, cfg.experiment.stream_id());
    let out = pool.install(|| experiments::run(&cfg.params, root))?;

    fs::create_dir_all(&cfg.out)?;
    let name = cfg.experiment.name();
    let mut files = Vec::new();
    for (suffix, table) in &out.tables {
        let file = if suffix.is_empty() { format!("{name}.csv") } else { format!("{name}.{suffix}.csv") };
        output::write_csv(&cfg.out.join(&file), table)?;
        files.push(file);
    }
    output::write_meta(
        &cfg.out.join(format!("{name}.meta.toml")),
        output::Meta {
            version: VERSION,
            wall_time: started.elapsed().as_secs_f64(),
            workers: pool.current_num_threads(),
            config: cfg.to_table(),
            results: out.results,
            violations: &out.violations,
            files: files.clone(),
        },
    )?;
    for f in &files {
        println!("{}", cfg.out.join(f).display());
    }
    if out.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(out.violations))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("monitor-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
