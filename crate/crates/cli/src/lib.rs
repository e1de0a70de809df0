//! Experiment runner behind the `mmtrain` binary.
//!
//! Every experiment reads a flat key/value config, runs on a worker pool of
//! the requested size and writes a CSV whose bytes depend only on the
//! config and the seed.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::Context;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::Outcome;

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub experiment: Experiment,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub threads: Option<usize>,
}

/// CSV bytes plus the experiment outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub csv: Vec<u8>,
    pub outcome: Outcome,
}

pub fn load_config(inv: &Invocation) -> anyhow::Result<ExperimentConfig> {
    let text = match &inv.config_path {
        Some(path) => Some(
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?,
        ),
        None => None,
    };
    let config = ExperimentConfig::resolve(inv.experiment, text.as_deref(), &inv.overrides, inv.seed)?;
    Ok(config)
}

/// Runs `config` on a pool of `threads` workers (all cores when `None`).
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> anyhow::Result<Rendered> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker pool")?;
    let outcome = pool.install(|| experiments::run(config))?;
    let csv = output::render(config, &outcome.table)?;
    Ok(Rendered { csv, outcome })
}

pub fn write_output(path: Option<&Path>, csv: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(csv).context("writing to stdout")
        }
    }
}
