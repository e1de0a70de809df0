//! One function per experiment, each turning a resolved config into a table.

use std::collections::BTreeSet;

use anyhow::{bail, Context};
use rayon::prelude::*;

use mmtrain_core::channel::{
    build_sensing_matrix, equispaced_tones, sample_channel, select_pilot_tones, synthesize_measurement,
    OfdmParams, SparseChannel,
};
use mmtrain_core::detection::{error_probability_mc, DetectionConfig};
use mmtrain_core::netsim::{
    collision_probability, collision_probability_mc, expected_singletons, optimal_group_size, rho_metrics,
    NetworkModel,
};
use mmtrain_core::pilots::{verify_codebook, PairCoverage, PilotCodebook, VerificationReport};
use mmtrain_core::recovery::{
    dantzig_recover, debias, fde_ls_recover, omp_recover, DantzigConfig, EpsilonRule, RecoveryResult,
};
use mmtrain_core::rng::trial_stream;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::output::{num, Table};

pub const FIG3_HEADER: [&str; 6] = ["K_G", "p_out", "rho_fq", "rho_ag_fq", "rho_cs", "rho_ag_cs"];
pub const DETECT_HEADER: [&str; 5] = ["M_BS", "gP", "threshold", "Pe_mc", "Pe_stderr"];
pub const RECOVER_HEADER: [&str; 6] = [
    "snr_db",
    "method",
    "nmse_db_mean",
    "support_rate",
    "pilot_tones_used",
    "solver_failures",
];
pub const CODEBOOK_HEADER: [&str; 14] = [
    "L_prime",
    "l",
    "K",
    "empty_checks",
    "empty_failures",
    "single_checks",
    "single_failures",
    "pair_checks",
    "pair_failures",
    "identified",
    "collision",
    "empty",
    "invalid",
    "passed",
];
pub const NETSIM_HEADER: [&str; 8] = [
    "N",
    "K_G",
    "alpha",
    "p_analytic",
    "p_mc",
    "p_stderr",
    "expected_singletons",
    "optimal_K_G",
];

/// Result of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    /// False when a verification experiment found a violation.
    pub passed: bool,
    /// Human-readable text to show next to the CSV.
    pub report: Option<String>,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            table,
            passed: true,
            report: None,
        }
    }
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<Outcome> {
    match config.experiment {
        Experiment::Fig3 => fig3(config).map(Outcome::table),
        Experiment::DetectSweep => detect_sweep(config).map(Outcome::table),
        Experiment::RecoverBench => recover_bench(config).map(Outcome::table),
        Experiment::CodebookVerify => codebook_verify(config),
        Experiment::Netsim => netsim(config).map(Outcome::table),
    }
}

fn ofdm_params(config: &ExperimentConfig) -> anyhow::Result<OfdmParams> {
    let params = OfdmParams::new(config.get("wt")?, config.get("taps")?, config.get("sparsity")?)?
        .with_pilot_count(config.get("pilots")?)?;
    Ok(params)
}

pub fn fig3(config: &ExperimentConfig) -> anyhow::Result<Table> {
    let params = ofdm_params(config)?;
    let cells: usize = config.get("cells")?;
    let (lo, hi): (usize, usize) = (config.get("group_min")?, config.get("group_max")?);
    if lo == 0 || lo > hi {
        bail!(ConfigError::Invalid {
            key: "group_min".into(),
            reason: format!("need 1 ≤ group_min ≤ group_max, got {lo}..{hi}"),
        });
    }
    let mut table = Table::new(&FIG3_HEADER);
    for p_out in config.list::<f64>("outage")? {
        for k in lo..=hi {
            let model = NetworkModel::with_outage(cells, p_out, k)?;
            let r = rho_metrics(&model, &params)?;
            table.push(vec![
                k.to_string(),
                num(p_out),
                num(r.fq),
                num(r.ag_fq),
                num(r.cs),
                num(r.ag_cs),
            ]);
        }
    }
    Ok(table)
}

pub fn detect_sweep(config: &ExperimentConfig) -> anyhow::Result<Table> {
    let trials: u64 = config.get("trials")?;
    let prior: f64 = config.get("prior")?;
    let mut table = Table::new(&DETECT_HEADER);
    for gp in config.list::<f64>("gp")? {
        for antennas in config.list::<usize>("antennas")? {
            let cfg = DetectionConfig::new(antennas, gp)?.with_prior(prior)?;
            let threshold = cfg.resolve_threshold()?;
            let est = error_probability_mc(&cfg, trials, config.seed)?;
            table.push(vec![
                antennas.to_string(),
                num(gp),
                num(threshold),
                num(est.value),
                num(est.std_error),
            ]);
        }
    }
    Ok(table)
}

/// Per-trial record for one estimator.
#[derive(Debug, Clone, Copy, Default)]
struct MethodTrial {
    nmse_db: Option<f64>,
    support_ok: bool,
}

impl MethodTrial {
    fn from(result: mmtrain_core::Result<RecoveryResult>, truth: &SparseChannel) -> Self {
        match result {
            Ok(mut r) => Self {
                nmse_db: r.evaluate(truth).ok(),
                support_ok: r.support_matches(truth),
            },
            Err(_) => Self::default(),
        }
    }
}

const METHODS: [&str; 4] = ["dantzig", "dantzig+debias", "omp", "fde_ls"];

fn recover_trial(
    base: &OfdmParams,
    snr_db: f64,
    noise_variance: f64,
    dantzig: &DantzigConfig,
    noiseless_epsilon: f64,
    seed: u64,
    stream: u64,
) -> anyhow::Result<[MethodTrial; 4]> {
    let noiseless = snr_db.is_infinite() && snr_db > 0.0;
    let (params, variance) = if noiseless {
        (*base, 0.0)
    } else {
        let energy = noise_variance * 10f64.powf(snr_db / 10.0);
        (base.with_symbol_energy(energy)?, noise_variance)
    };
    let mut rng = trial_stream(seed, stream);
    let tones = select_pilot_tones(&params, &BTreeSet::new(), &mut rng)?;
    let truth = sample_channel(&params, &mut rng)?;
    let sensing = build_sensing_matrix(&tones, &params)?;
    let full = build_sensing_matrix(&equispaced_tones(&params), &params)?;
    let y = synthesize_measurement(&sensing, &truth, &params, variance, &mut rng)?;
    let y_full = synthesize_measurement(&full, &truth, &params, variance, &mut rng)?;

    let cfg = if noiseless {
        // the floor is a noise level; without noise only the relative cut applies
        DantzigConfig {
            epsilon: EpsilonRule::Explicit(noiseless_epsilon),
            magnitude_floor: 0.0,
            ..*dantzig
        }
    } else {
        *dantzig
    };
    let raw = dantzig_recover(&y, &sensing, &params, &cfg.with_debias(false));
    let refined = raw.clone().and_then(|r| debias(&r, &y, &sensing, &params));
    Ok([
        MethodTrial::from(raw, &truth),
        MethodTrial::from(refined, &truth),
        MethodTrial::from(omp_recover(&y, &sensing, &params, params.sparsity), &truth),
        MethodTrial::from(fde_ls_recover(&y_full, &full, &params), &truth),
    ])
}

pub fn recover_bench(config: &ExperimentConfig) -> anyhow::Result<Table> {
    let base = ofdm_params(config)?;
    let trials: u64 = config.get("trials")?;
    let noise_variance: f64 = config.get("noise_variance")?;
    let noiseless_epsilon: f64 = config.get("noiseless_epsilon")?;
    let dantzig = DantzigConfig {
        epsilon: EpsilonRule::Scaled {
            c: config.get("epsilon_c")?,
            noise_std: noise_variance.sqrt(),
        },
        ..DantzigConfig::explicit(1.0)
    }
    .with_magnitude_floor(config.get("magnitude_floor")?)
    .with_phasors(config.get("phasors")?);
    dantzig.validate()?;
    if trials == 0 {
        bail!(ConfigError::Invalid {
            key: "trials".into(),
            reason: "must be positive".into()
        });
    }

    let mut table = Table::new(&RECOVER_HEADER);
    for (i, snr_db) in config.list::<f64>("snr_db")?.into_iter().enumerate() {
        let records: Vec<[MethodTrial; 4]> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let stream = ((i as u64) << 32) | t;
                recover_trial(
                    &base,
                    snr_db,
                    noise_variance,
                    &dantzig,
                    noiseless_epsilon,
                    config.seed,
                    stream,
                )
            })
            .collect::<anyhow::Result<_>>()?;
        for (m, method) in METHODS.iter().enumerate() {
            let nmse: Vec<f64> = records.iter().filter_map(|r| r[m].nmse_db).collect();
            let mean = if nmse.is_empty() {
                f64::NAN
            } else {
                nmse.iter().sum::<f64>() / nmse.len() as f64
            };
            let hits = records.iter().filter(|r| r[m].support_ok).count();
            let failures = records.len() - nmse.len();
            let tones = if *method == "fde_ls" {
                base.tap_count
            } else {
                base.pilot_count
            };
            table.push(vec![
                num(snr_db),
                method.to_string(),
                num(mean),
                num(hits as f64 / trials as f64),
                tones.to_string(),
                failures.to_string(),
            ]);
        }
    }
    Ok(table)
}

pub fn codebook_verify(config: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let ones: usize = config.get("ones")?;
    let zeros: usize = config.get("zeros")?;
    let users: usize = config.get("users")?;
    let book = PilotCodebook::build(users, ones, zeros).map_err(|e| ConfigError::Invalid {
        key: "users".into(),
        reason: e.to_string(),
    })?;
    let coverage = PairCoverage::auto(
        users,
        config.get("pair_limit")?,
        config.get("pair_samples")?,
        config.seed,
    );
    let report: VerificationReport = verify_codebook(&book, coverage)?;

    let text = book.to_text();
    let path = config.raw("codebook_out");
    if !path.is_empty() {
        std::fs::write(path, &text).with_context(|| format!("writing codebook to {path}"))?;
    }
    let mut table = Table::new(&CODEBOOK_HEADER);
    table.push(vec![
        ones.to_string(),
        zeros.to_string(),
        users.to_string(),
        report.empty_checks.to_string(),
        report.empty_failures.to_string(),
        report.single_checks.to_string(),
        report.single_failures.to_string(),
        report.pair_checks.to_string(),
        report.pair_failures.to_string(),
        report.identified.to_string(),
        report.collisions.to_string(),
        report.empties.to_string(),
        report.invalid.to_string(),
        report.passed().to_string(),
    ]);
    Ok(Outcome {
        table,
        passed: report.passed(),
        report: Some(text),
    })
}

pub fn netsim(config: &ExperimentConfig) -> anyhow::Result<Table> {
    let trials: u64 = config.get("trials")?;
    let mut table = Table::new(&NETSIM_HEADER);
    for n in config.list::<usize>("cells")? {
        for k in config.list::<usize>("group_sizes")? {
            for alpha in config.list::<f64>("coverage")? {
                let model = NetworkModel::new(n, alpha, k)?;
                let est = collision_probability_mc(&model, trials, config.seed)?;
                table.push(vec![
                    n.to_string(),
                    k.to_string(),
                    num(alpha),
                    num(collision_probability(&model)),
                    num(est.value),
                    num(est.std_error),
                    num(expected_singletons(&model)),
                    optimal_group_size(&model)?.to_string(),
                ]);
            }
        }
    }
    Ok(table)
}
