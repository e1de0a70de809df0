use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mmtrain::{execute, load_config, write_output, Experiment, Invocation};

/// Run an uplink-training experiment and write its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "mmtrain", version)]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation {
        experiment: args.experiment,
        config_path: args.config,
        seed: args.seed,
        out: args.out,
        overrides: args.overrides,
        threads: args.threads,
    };
    let run = || -> anyhow::Result<bool> {
        let config = load_config(&inv)?;
        let rendered = execute(&config, inv.threads)?;
        if let Some(report) = &rendered.outcome.report {
            eprint!("{report}");
        }
        write_output(inv.out.as_deref(), &rendered.csv)?;
        Ok(rendered.outcome.passed)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
