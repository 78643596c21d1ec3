//! Experiment configuration: one JSON document, with command-line overrides
//! patched in before validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use polarguard_core::keyagree::{BlockCodeRule, DiscreteDist, KeyRule};
use polarguard_core::{ChannelModel, RateRule};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config must be a JSON object")]
    NotAnObject,
    #[error("missing required field `{field}` for experiment `{kind}`")]
    MissingField {
        kind: ExperimentKind,
        field: &'static str,
    },
    #[error("config kind `{file}` does not match command `{command}`")]
    KindMismatch {
        file: ExperimentKind,
        command: ExperimentKind,
    },
    #[error("invalid override `{0}`, expected key=value")]
    BadOverride(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Polarize,
    Construct,
    SimulateWiretap,
    Keyagree,
    HashCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Polarize => "polarize",
            ExperimentKind::Construct => "construct",
            ExperimentKind::SimulateWiretap => "simulate-wiretap",
            ExperimentKind::Keyagree => "keyagree",
            ExperimentKind::HashCheck => "hash-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_owned()))
            .map_err(|_| format!("unknown experiment `{s}`"))
    }
}

fn default_beta() -> f64 {
    0.25
}

fn default_mc_trials() -> usize {
    10_000
}

fn default_runs() -> usize {
    1
}

fn default_eps_star() -> f64 {
    0.1
}

/// Every experiment's parameters. Which fields are required depends on
/// `kind`; see [`ExperimentConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: Option<u64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main: Option<ChannelModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<ChannelModel>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Polarize: sweep block exponents `n_min..=n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u32>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Construct: number of information positions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Construct: `K = ⌈rate·N⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_rule: Option<RateRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Trials for Monte Carlo Z tables of non-erasure channels.
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub super_blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks_per_super: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_main: Option<DiscreteDist>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_eve: Option<DiscreteDist>,
    #[serde(default)]
    pub block_rule: BlockCodeRule,
    #[serde(default)]
    pub key_rule: KeyRule,
    #[serde(default = "default_eps_star")]
    pub eps_star: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,

    /// Hash check: input length in bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bits: Option<usize>,
    /// Hash check: key lengths to test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<Vec<usize>>,
    /// Hash check: sampled hash matrices per key length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

fn need<T: Clone>(
    kind: ExperimentKind,
    value: &Option<T>,
    field: &'static str,
) -> Result<T, ConfigError> {
    value
        .clone()
        .ok_or(ConfigError::MissingField { kind, field })
}

impl ExperimentConfig {
    /// Parse a JSON document, apply `overrides` (`key=value`, value parsed
    /// as JSON and otherwise taken as a string), fill in `kind` from the
    /// command if absent, and validate.
    pub fn from_json_str(
        text: &str,
        command: Option<ExperimentKind>,
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let mut doc: Value = serde_json::from_str(text)?;
        let obj = doc.as_object_mut().ok_or(ConfigError::NotAnObject)?;
        apply_overrides(obj, overrides);
        if let Some(command) = command {
            match obj.get("kind") {
                None => {
                    obj.insert("kind".into(), Value::String(command.as_str().into()));
                }
                Some(k) => {
                    let file: ExperimentKind = serde_json::from_value(k.clone())?;
                    if file != command {
                        return Err(ConfigError::KindMismatch { file, command });
                    }
                }
            }
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(
        path: &Path,
        command: Option<ExperimentKind>,
        overrides: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text, command, overrides)
    }

    /// Checks that the fields `kind` needs are present.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind;
        need(kind, &self.seed, "seed")?;
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(ConfigError::Invalid {
                field: "beta",
                reason: format!("{} not in (0, 0.5)", self.beta),
            });
        }
        if self.threads == Some(0) {
            return Err(ConfigError::Invalid {
                field: "threads",
                reason: "must be >= 1".into(),
            });
        }
        match kind {
            ExperimentKind::Polarize => {
                need(kind, &self.channel, "channel")?;
                let n = need(kind, &self.n, "n")?;
                if let Some(lo) = self.n_min {
                    if lo == 0 || lo > n {
                        return Err(ConfigError::Invalid {
                            field: "n_min",
                            reason: format!("{lo} not in [1, n]"),
                        });
                    }
                }
            }
            ExperimentKind::Construct => {
                need(kind, &self.channel, "channel")?;
                need(kind, &self.n, "n")?;
                if self.k.is_some() && self.rate.is_some() {
                    return Err(ConfigError::Invalid {
                        field: "rate",
                        reason: "give either `k` or `rate`, not both".into(),
                    });
                }
            }
            ExperimentKind::SimulateWiretap => {
                need(kind, &self.main, "main")?;
                need(kind, &self.eve, "eve")?;
                need(kind, &self.n, "n")?;
                need(kind, &self.trials, "trials")?;
            }
            ExperimentKind::Keyagree => {
                need(kind, &self.n, "n")?;
                need(kind, &self.dist_main, "dist_main")?;
                need(kind, &self.dist_eve, "dist_eve")?;
                need(kind, &self.super_blocks, "super_blocks")?;
                need(kind, &self.blocks_per_super, "blocks_per_super")?;
                if self.runs == 0 {
                    return Err(ConfigError::Invalid {
                        field: "runs",
                        reason: "must be >= 1".into(),
                    });
                }
            }
            ExperimentKind::HashCheck => {
                let bits = need(kind, &self.input_bits, "input_bits")?;
                let keys = need(kind, &self.key_bits, "key_bits")?;
                need(kind, &self.samples, "samples")?;
                if !(1..=16).contains(&bits) {
                    return Err(ConfigError::Invalid {
                        field: "input_bits",
                        reason: format!("{bits} not in [1, 16]"),
                    });
                }
                if let Some(r) = keys.iter().find(|&&r| r == 0 || r > bits.min(8)) {
                    return Err(ConfigError::Invalid {
                        field: "key_bits",
                        reason: format!("{r} not in [1, min(input_bits, 8)]"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated configs carry a seed")
    }
}

fn apply_overrides(obj: &mut Map<String, Value>, overrides: &[(String, String)]) {
    for (key, raw) in overrides {
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        obj.insert(key.replace('-', "_"), value);
    }
}

/// Split `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    s.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .ok_or_else(|| ConfigError::BadOverride(s.to_owned()))
}
