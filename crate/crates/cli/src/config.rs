//! Flat `key = value` experiment configuration.
//!
//! Values are resolved in order: built-in defaults, the config file, then
//! `--set` overrides. Keys an experiment does not know are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{key}` for experiment {experiment}")]
    UnknownKey { key: String, experiment: Experiment },
    #[error("override must look like key=value, found {0:?}")]
    Override(String),
    #[error("key `{key}`: cannot parse {value:?} as {expected}")]
    Value {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Experiment {
    /// Analytic multiplexing curves over group size and outage.
    Fig3,
    /// Monte-Carlo detection error over antennas and received power.
    DetectSweep,
    /// Channel-estimation accuracy of the sparse and dense estimators.
    RecoverBench,
    /// Exhaustive decoding check of a pilot codebook.
    CodebookVerify,
    /// Collision probability, analytic against Monte-Carlo.
    Netsim,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig3 => "fig3",
            Self::DetectSweep => "detect-sweep",
            Self::RecoverBench => "recover-bench",
            Self::CodebookVerify => "codebook-verify",
            Self::Netsim => "netsim",
        }
    }

    /// Known keys with their default values.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Self::Fig3 => &[
                ("wt", "1000"),
                ("taps", "100"),
                ("sparsity", "4"),
                ("pilots", "20"),
                ("cells", "16"),
                ("group_min", "1"),
                ("group_max", "100"),
                ("outage", "0,0.3"),
            ],
            Self::DetectSweep => &[
                ("antennas", "16,32,64,128"),
                ("gp", "0,0.5,1,2,5,10"),
                ("trials", "100000"),
                ("prior", "0.5"),
            ],
            Self::RecoverBench => &[
                ("wt", "1000"),
                ("taps", "100"),
                ("sparsity", "4"),
                ("pilots", "20"),
                ("snr_db", "inf,10,20,30"),
                ("noise_variance", "1"),
                ("trials", "200"),
                ("epsilon_c", "1"),
                ("noiseless_epsilon", "1e-6"),
                ("magnitude_floor", "0.1"),
                ("phasors", "8"),
            ],
            Self::CodebookVerify => &[
                ("ones", "20"),
                ("zeros", "1"),
                ("users", "21"),
                ("pair_limit", "300"),
                ("pair_samples", "10000"),
                ("codebook_out", ""),
            ],
            Self::Netsim => &[
                ("cells", "4,16,64"),
                ("group_sizes", "1,4,16,64"),
                ("coverage", "0.5,0.7,1"),
                ("trials", "100000"),
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    values: BTreeMap<String, String>,
}

pub const DEFAULT_SEED: u64 = 1;

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let values = experiment
            .defaults()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self {
            experiment,
            seed: DEFAULT_SEED,
            values,
        }
    }

    /// Resolves a configuration from optional file text and overrides.
    /// `seed` is accepted as a key everywhere; an explicit seed wins.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&str>,
        overrides: &[String],
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut config = Self::defaults(experiment);
        if let Some(text) = file {
            let mut seen = BTreeMap::new();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                })?;
                let key = key.trim();
                if seen.insert(key.to_string(), ()).is_some() {
                    return Err(ConfigError::Duplicate {
                        line: i + 1,
                        key: key.into(),
                    });
                }
                config.set(key, value)?;
            }
        }
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(item.clone()))?;
            config.set(key.trim(), value)?;
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = canonical(value);
        if key == "seed" {
            self.seed = parse_scalar(key, &value)?;
            return Ok(());
        }
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(ConfigError::UnknownKey {
                key: key.into(),
                experiment: self.experiment,
            }),
        }
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("{key} is not a key of {}", self.experiment))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        parse_scalar(key, self.raw(key))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',').map(|item| parse_scalar(key, item)).collect()
    }

    /// `experiment=...` followed by the sorted parameters, one per line.
    /// The seed is reported separately and not part of this text.
    pub fn canonical_text(&self) -> String {
        let mut out = format!("experiment={}\n", self.experiment);
        for (k, v) in &self.values {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

fn canonical(value: &str) -> String {
    value.split(',').map(str::trim).collect::<Vec<_>>().join(",")
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| ConfigError::Value {
        key: key.into(),
        value: value.into(),
        expected: std::any::type_name::<T>(),
    })
}
