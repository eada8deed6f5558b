//! Flat TOML run configuration. Common keys sit next to the experiment's
//! own parameters; unknown keys are rejected by name.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use monitor_lab::circuit::InitialPair;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    PurityGrowth,
    EntanglementGrowth,
    StatmechCheck,
    MincutPercolation,
    Learnability,
    AncillaProbe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::PurityGrowth => "purity-growth",
            Experiment::EntanglementGrowth => "entanglement-growth",
            Experiment::StatmechCheck => "statmech-check",
            Experiment::MincutPercolation => "mincut-percolation",
            Experiment::Learnability => "learnability",
            Experiment::AncillaProbe => "ancilla-probe",
        }
    }

    /// Stream id of the experiment's root random stream.
    pub fn stream_id(self) -> u64 {
        self as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pair {
    Haar,
    Product,
}

impl From<Pair> for InitialPair {
    fn from(p: Pair) -> Self {
        match p {
            Pair::Haar => InitialPair::HaarOrthogonal,
            Pair::Product => InitialPair::ProductOrthogonal,
        }
    }
}

fn rate_grid(lo: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((lo + step * i as f64) * 1e6).round() / 1e6).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PurityGrowth {
    pub sites: usize,
    pub local_dim: usize,
    pub t_max: usize,
    /// Region is `[0, cut)`; half chain if absent.
    pub cut: Option<usize>,
    pub samples: usize,
}

impl Default for PurityGrowth {
    fn default() -> Self {
        Self { sites: 20, local_dim: 2, t_max: 4, cut: None, samples: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntanglementGrowth {
    pub sites: usize,
    pub local_dim: usize,
    pub depth: usize,
    pub rates: Vec<f64>,
    /// Rényi index; 1 is von Neumann.
    pub renyi: u32,
    pub region_start: usize,
    pub region_end: Option<usize>,
    pub samples: usize,
}

impl Default for EntanglementGrowth {
    fn default() -> Self {
        Self { sites: 10, local_dim: 2, depth: 10, rates: vec![0.0, 0.1, 0.2, 0.3], renyi: 2, region_start: 0, region_end: None, samples: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatmechCheck {
    pub local_dim: u64,
    pub replicas: usize,
    pub t_max: usize,
    pub p: f64,
}

impl Default for StatmechCheck {
    fn default() -> Self {
        Self { local_dim: 2, replicas: 2, t_max: 6, p: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MincutPercolation {
    pub sizes: Vec<usize>,
    pub rates: Vec<f64>,
    pub samples: usize,
    pub wall_sites: usize,
    pub wall_depth: usize,
    pub wall_sizes: Vec<usize>,
    pub wall_rates: Vec<f64>,
    pub wall_samples: usize,
}

impl Default for MincutPercolation {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 32, 64],
            rates: rate_grid(0.35, 0.03, 11),
            samples: 2000,
            wall_sites: 64,
            wall_depth: 64,
            wall_sizes: vec![4, 8, 12, 16, 20, 24],
            wall_rates: vec![0.3, 0.5, 0.7],
            wall_samples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Learnability {
    pub sizes: Vec<usize>,
    pub rates: Vec<f64>,
    /// Circuit depth is `depth_factor * L`.
    pub depth_factor: usize,
    pub local_dim: usize,
    pub games: usize,
    pub pair: Pair,
}

impl Default for Learnability {
    fn default() -> Self {
        Self { sizes: vec![4, 6, 8], rates: rate_grid(0.0, 0.1, 11), depth_factor: 2, local_dim: 2, games: 1000, pair: Pair::Haar }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncillaProbe {
    pub sizes: Vec<usize>,
    pub rates: Vec<f64>,
    pub depth_factor: usize,
    pub local_dim: usize,
    pub samples: usize,
    pub pair: Pair,
}

impl Default for AncillaProbe {
    fn default() -> Self {
        Self { sizes: vec![8, 10, 12], rates: vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.4], depth_factor: 2, local_dim: 2, samples: 200, pair: Pair::Haar }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    PurityGrowth(PurityGrowth),
    EntanglementGrowth(EntanglementGrowth),
    StatmechCheck(StatmechCheck),
    MincutPercolation(MincutPercolation),
    Learnability(Learnability),
    AncillaProbe(AncillaProbe),
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
    pub params: Params,
}

/// Command-line values that override file keys.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

fn parse_params<T: DeserializeOwned>(rest: Table) -> Result<T, CliError> {
    T::deserialize(Value::Table(rest)).map_err(|e| CliError::Config(e.to_string().trim().to_string()))
}

fn take<T: DeserializeOwned>(table: &mut Table, key: &str) -> Result<Option<T>, CliError> {
    table
        .remove(key)
        .map(|v| v.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("key `{key}`: {}", e.to_string().trim()))))
        .transpose()
}

impl ExperimentConfig {
    pub fn from_table(experiment: Experiment, mut table: Table, overrides: &Overrides) -> Result<Self, CliError> {
        if let Some(name) = take::<String>(&mut table, "experiment")? {
            if name != experiment.name() {
                return Err(CliError::Config(format!("key `experiment`: file names `{name}` but `{}` was requested", experiment.name())));
            }
        }
        let seed = overrides.seed.or(take(&mut table, "seed")?).unwrap_or(1);
        let workers = overrides.workers.or(take(&mut table, "workers")?).unwrap_or(0);
        let out = overrides.out.clone().or(take(&mut table, "out")?).unwrap_or_else(|| PathBuf::from("results"));
        let params = match experiment {
            Experiment::PurityGrowth => {
                let mut p: PurityGrowth = parse_params(table)?;
                p.cut.get_or_insert(p.sites / 2);
                Params::PurityGrowth(p)
            }
            Experiment::EntanglementGrowth => {
                let mut p: EntanglementGrowth = parse_params(table)?;
                p.region_end.get_or_insert(p.sites / 2);
                Params::EntanglementGrowth(p)
            }
            Experiment::StatmechCheck => Params::StatmechCheck(parse_params(table)?),
            Experiment::MincutPercolation => Params::MincutPercolation(parse_params(table)?),
            Experiment::Learnability => Params::Learnability(parse_params(table)?),
            Experiment::AncillaProbe => Params::AncillaProbe(parse_params(table)?),
        };
        Ok(Self { experiment, seed, workers, out, params })
    }

    pub fn from_toml(experiment: Experiment, text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim().to_string()))?;
        Self::from_table(experiment, table, overrides)
    }

    /// Flat table of every resolved key.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        t.insert("experiment".into(), Value::String(self.experiment.name().into()));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert("workers".into(), Value::Integer(self.workers as i64));
        t.insert("out".into(), Value::String(self.out.display().to_string()));
        let params = match &self.params {
            Params::PurityGrowth(p) => Value::try_from(p),
            Params::EntanglementGrowth(p) => Value::try_from(p),
            Params::StatmechCheck(p) => Value::try_from(p),
            Params::MincutPercolation(p) => Value::try_from(p),
            Params::Learnability(p) => Value::try_from(p),
            Params::AncillaProbe(p) => Value::try_from(p),
        };
        if let Ok(Value::Table(p)) = params {
            t.extend(p);
        }
        t
    }
}
