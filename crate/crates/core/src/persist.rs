//! On-disk formats: network weights as JSON, metrics and training logs as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{actor_architecture, critic_architecture, Agent, AgentConfig, TrainingLog};
use crate::eval::Metrics;
use crate::nn::{Architecture, Mlp, NnError};

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed weights file {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unsupported weights format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("weights architecture for {network} does not match the configuration: file has {found:?}, config wants {expected:?}")]
    Architecture { network: String, found: Box<Architecture>, expected: Box<Architecture> },
    #[error("invalid {network} weights: {source}")]
    Network { network: String, source: NnError },
    #[error(transparent)]
    Toml(#[from] toml::ser::Error),
    #[error(transparent)]
    Json2(#[from] serde_json::Error),
}

/// One network: architecture plus all parameters, layer by layer, each
/// layer's weight matrix in row-major `(out, in)` order followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRecord {
    pub architecture: Architecture,
    pub parameters: Vec<f64>,
}

impl NetworkRecord {
    pub fn of(net: &Mlp<f64>) -> Self {
        Self { architecture: net.architecture().clone(), parameters: net.flatten() }
    }

    pub fn to_mlp(&self, name: &str) -> Result<Mlp<f64>, PersistError> {
        Mlp::from_flat(self.architecture.clone(), &self.parameters)
            .map_err(|source| PersistError::Network { network: name.into(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub format_version: u32,
    pub label: String,
    pub actor: NetworkRecord,
    pub critics: Vec<NetworkRecord>,
}

impl WeightsFile {
    pub fn of(agent: &Agent) -> Self {
        Self {
            format_version: WEIGHTS_FORMAT_VERSION,
            label: agent.config.label(),
            actor: NetworkRecord::of(&agent.actor),
            critics: agent.critics.iter().map(NetworkRecord::of).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, PersistError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, PersistError> {
        let file: Self = serde_json::from_str(text).map_err(|source| PersistError::Json { path: path.into(), source })?;
        if file.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(PersistError::Version { found: file.format_version, expected: WEIGHTS_FORMAT_VERSION });
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        write(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        Self::from_json(&read(path)?, path)
    }

    /// The actor, checked against the architecture `config` would build.
    pub fn actor_for(&self, config: &AgentConfig, obs_dim: usize) -> Result<Mlp<f64>, PersistError> {
        let expected = actor_architecture(obs_dim, &config.hidden);
        check_architecture("actor", &self.actor.architecture, &expected)?;
        self.actor.to_mlp("actor")
    }

    pub fn critics_for(&self, config: &AgentConfig, obs_dim: usize) -> Result<Vec<Mlp<f64>>, PersistError> {
        let expected = critic_architecture(obs_dim, &config.hidden, config.q_dim);
        self.critics
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let name = format!("critic {}", i + 1);
                check_architecture(&name, &rec.architecture, &expected)?;
                rec.to_mlp(&name)
            })
            .collect()
    }
}

fn check_architecture(network: &str, found: &Architecture, expected: &Architecture) -> Result<(), PersistError> {
    if found == expected {
        Ok(())
    } else {
        Err(PersistError::Architecture {
            network: network.into(),
            found: Box::new(found.clone()),
            expected: Box::new(expected.clone()),
        })
    }
}

fn read(path: &Path) -> Result<String, PersistError> {
    std::fs::read_to_string(path).map_err(|source| PersistError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), PersistError> {
    std::fs::write(path, text).map_err(|source| PersistError::Io { path: path.into(), source })
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    label: &'a str,
    metrics: &'a Metrics,
}

pub fn metrics_to_toml(label: &str, metrics: &Metrics) -> Result<String, PersistError> {
    Ok(toml::to_string(&MetricsDoc { label, metrics })?)
}

pub fn save_metrics(path: &Path, label: &str, metrics: &Metrics) -> Result<(), PersistError> {
    write(path, &metrics_to_toml(label, metrics)?)
}

pub fn save_training_log(path: &Path, log: &TrainingLog) -> Result<(), PersistError> {
    write(path, &toml::to_string(log)?)
}
