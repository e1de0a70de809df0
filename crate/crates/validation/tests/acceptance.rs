//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;

use statrs::distribution::{ContinuousCDF, Gamma};

use mmtrain::{execute, Experiment, ExperimentConfig};
use mmtrain_core::channel::{
    build_sensing_matrix, equispaced_tones, sample_channel, select_pilot_tones, synthesize_measurement,
    OfdmParams,
};
use mmtrain_core::detection::{error_probability_mc, optimal_threshold, DetectionConfig};
use mmtrain_core::netsim::{
    collision_probability, collision_probability_mc, collision_standard_error, reuse_gain, rho_metrics,
    NetworkModel,
};
use mmtrain_core::pilots::{code_efficiency, max_users, verify_codebook, PairCoverage, PilotCodebook};
use mmtrain_core::recovery::{dantzig_recover, fde_ls_recover, omp_recover, DantzigConfig};
use mmtrain_core::rng::trial_stream;

const SEED: u64 = 20_240_601;

// Tolerances.
const RHO_TOL: f64 = 0.01;
const TIE_REL: f64 = 1e-12;
const COLLISION_Z: f64 = 4.0;
const DETECT_PE_MAX: f64 = 1e-3;
const IDLE_Z: f64 = 3.0;
const THRESHOLD_TOL: f64 = 1e-4;
const AGREEMENT_MIN: f64 = 0.99;
const SUPPORT_RATE_MIN: f64 = 0.90;
const NMSE_BAND_DB: f64 = 3.0;
const GAIN_TOL: f64 = 0.001;

type Criterion = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(checks: &[(bool, String)]) -> Self {
        Self {
            pass: checks.iter().all(|(ok, _)| *ok),
            detail: checks
                .iter()
                .map(|(ok, msg)| format!("{}{msg}", if *ok { "" } else { "FAILED " }))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

/// `(15/16)^15` from exact integers.
fn fifteen_sixteenths_pow15() -> f64 {
    let num: u128 = 15u128.pow(15);
    let den: u128 = 1u128 << 60;
    num as f64 / den as f64
}

fn argmax_larger_on_tie(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= values[best] * (1.0 - TIE_REL) {
            best = i;
        }
    }
    best
}

fn unimodal(values: &[f64]) -> bool {
    let peak = argmax_larger_on_tie(values);
    values[..=peak].windows(2).all(|w| w[1] >= w[0] * (1.0 - TIE_REL))
        && values[peak..].windows(2).all(|w| w[1] <= w[0] * (1.0 + TIE_REL))
}

fn fig3_analytic() -> Verdict {
    let params = OfdmParams::reference();
    let at = |alpha: f64, k: usize| rho_metrics(&NetworkModel::new(16, alpha, k).unwrap(), &params).unwrap();
    let base = at(1.0, 16);
    let oracle = 1000.0 * 16.0 / 21.0 * fifteen_sixteenths_pow15();
    let curve = |alpha: f64| -> Vec<f64> { (1..=100).map(|k| at(alpha, k).ag_cs).collect() };
    let full = curve(1.0);
    let partial = curve(0.7);
    let peak_full = argmax_larger_on_tie(&full) + 1;
    let peak_partial = argmax_larger_on_tie(&partial) + 1;
    Verdict::new(&[
        (base.fq == 10.0, format!("rho_fq={}", base.fq)),
        (base.cs == 50.0, format!("rho_cs={}", base.cs)),
        (
            (base.ag_cs - oracle).abs() <= RHO_TOL,
            format!("rho_ag_cs(16)={:.5} oracle={oracle:.5}", base.ag_cs),
        ),
        (unimodal(&full) && unimodal(&partial), "unimodal".into()),
        (peak_full == 16, format!("argmax(a=1)={peak_full}")),
        (
            [22, 23].contains(&peak_partial),
            format!("argmax(a=0.7)={peak_partial}"),
        ),
    ])
}

fn collision_grid() -> Verdict {
    let trials = 100_000;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut failures = 0;
    let mut points = 0;
    for n in [4, 16, 64] {
        for k in [1, 4, 16, 64] {
            for alpha in [0.5, 0.7, 1.0] {
                let model = NetworkModel::new(n, alpha, k).unwrap();
                let p = collision_probability(&model);
                let est = collision_probability_mc(&model, trials, SEED).unwrap();
                let se = collision_standard_error(&model, trials);
                let diff = (est.value - p).abs();
                let z = if se > 0.0 {
                    diff / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                points += 1;
                if z > COLLISION_Z {
                    failures += 1;
                }
                if z > worst.0 || worst.1.is_empty() {
                    worst = (z, format!("N={n} K_G={k} a={alpha}"));
                }
            }
        }
    }
    Verdict::new(&[
        (
            failures == 0,
            format!("{}/{points} points within {COLLISION_Z} SE", points - failures),
        ),
        (true, format!("max z={:.2} at {}", worst.0, worst.1)),
    ])
}

/// P_e of the energy detector at equal priors, straight from the gamma laws.
fn pe_oracle(antennas: usize, gp: f64, eta: f64) -> f64 {
    let m = antennas as f64;
    let idle = Gamma::new(m, m).unwrap();
    let active = Gamma::new(m, m / (1.0 + gp)).unwrap();
    0.5 * idle.sf(eta) + 0.5 * active.cdf(eta)
}

fn detection() -> Verdict {
    let trials = 100_000;
    let strong = error_probability_mc(&DetectionConfig::new(128, 10.0).unwrap(), trials, SEED).unwrap();
    let idle = error_probability_mc(&DetectionConfig::new(64, 0.0).unwrap(), trials, SEED).unwrap();
    let idle_se = (0.25 / trials as f64).sqrt();

    let eta = optimal_threshold(&DetectionConfig::new(64, 10.0).unwrap()).unwrap();
    let scan = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|x| (x, pe_oracle(64, 10.0, x)))
            .fold(
                (lo, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            )
    };
    let coarse = scan(1.0, 11.0, 1e-3).0;
    let fine = scan(coarse - 2e-3, coarse + 2e-3, 1e-6).0;
    Verdict::new(&[
        (
            strong.value < DETECT_PE_MAX,
            format!("Pe(gP=10,M=128)={:.2e}", strong.value),
        ),
        (
            (idle.value - 0.5).abs() <= IDLE_Z * idle_se,
            format!("Pe(gP=0)={:.4}", idle.value),
        ),
        (
            (eta - fine).abs() <= THRESHOLD_TOL,
            format!("eta={eta:.6} scan={fine:.6}"),
        ),
    ])
}

fn recovery() -> Verdict {
    let base = OfdmParams::reference();
    let noiseless_trials = 500u64;
    let mut omp_exact = 0;
    let mut agree = 0;
    for t in 0..noiseless_trials {
        let mut rng = trial_stream(SEED, t);
        let tones = select_pilot_tones(&base, &BTreeSet::new(), &mut rng).unwrap();
        let truth = sample_channel(&base, &mut rng).unwrap();
        let x = build_sensing_matrix(&tones, &base).unwrap();
        let y = synthesize_measurement(&x, &truth, &base, 0.0, &mut rng).unwrap();
        let omp = omp_recover(&y, &x, &base, base.sparsity).unwrap();
        omp_exact += usize::from(omp.support_matches(&truth));
        if let Ok(dz) = dantzig_recover(&y, &x, &base, &DantzigConfig::explicit(1e-6)) {
            agree += usize::from(dz.recovered_support == omp.recovered_support);
        }
    }

    let noisy_trials = 200u64;
    let params = base.with_symbol_energy(100.0).unwrap();
    let full = build_sensing_matrix(&equispaced_tones(&params), &params).unwrap();
    let cfg = DantzigConfig::scaled(1.0)
        .with_debias(true)
        .with_magnitude_floor(0.1);
    let (mut supports, mut dz_nmse, mut fde_nmse) = (0, 0.0, 0.0);
    for t in 0..noisy_trials {
        let mut rng = trial_stream(SEED, (1 << 32) | t);
        let tones = select_pilot_tones(&params, &BTreeSet::new(), &mut rng).unwrap();
        let truth = sample_channel(&params, &mut rng).unwrap();
        let x = build_sensing_matrix(&tones, &params).unwrap();
        let y = synthesize_measurement(&x, &truth, &params, 1.0, &mut rng).unwrap();
        let y_full = synthesize_measurement(&full, &truth, &params, 1.0, &mut rng).unwrap();
        let mut dz = dantzig_recover(&y, &x, &params, &cfg).unwrap();
        let mut fde = fde_ls_recover(&y_full, &full, &params).unwrap();
        supports += usize::from(dz.support_matches(&truth));
        dz_nmse += dz.evaluate(&truth).unwrap();
        fde_nmse += fde.evaluate(&truth).unwrap();
    }
    let rate = supports as f64 / noisy_trials as f64;
    let (dz_nmse, fde_nmse) = (dz_nmse / noisy_trials as f64, fde_nmse / noisy_trials as f64);
    let agreement = agree as f64 / noiseless_trials as f64;
    Verdict::new(&[
        (
            omp_exact as u64 == noiseless_trials,
            format!("omp exact {omp_exact}/{noiseless_trials}"),
        ),
        (
            agreement >= AGREEMENT_MIN,
            format!("dantzig/omp agreement {agreement:.3}"),
        ),
        (rate >= SUPPORT_RATE_MIN, format!("20dB support rate {rate:.3}")),
        (
            (dz_nmse - fde_nmse).abs() <= NMSE_BAND_DB,
            format!("20dB nmse dantzig+debias {dz_nmse:.2} dB vs fde_ls {fde_nmse:.2} dB"),
        ),
    ])
}

/// Binomial table built by Pascal's rule.
fn pascal(rows: usize) -> Vec<Vec<u128>> {
    let mut t: Vec<Vec<u128>> = vec![vec![1]];
    for n in 1..=rows {
        let prev = &t[n - 1];
        let mut row = vec![1u128; n + 1];
        for k in 1..n {
            row[k] = prev[k - 1] + prev[k];
        }
        t.push(row);
    }
    t
}

fn codebook() -> Verdict {
    let mut checks = Vec::new();

    let book = PilotCodebook::build(4, 3, 1).unwrap();
    let expected = "4 4 3 1\n1110\n1101\n1011\n0111\n";
    let report = verify_codebook(&book, PairCoverage::Exhaustive).unwrap();
    checks.push((
        report.passed() && book.to_text() == expected,
        "(3,1,4) anti-diagonal".to_string(),
    ));

    for (ones, zeros, users, pairs) in [(20, 1, 21, 210u64), (20, 2, 231, 26_565)] {
        let book = PilotCodebook::build(users, ones, zeros).unwrap();
        let r = verify_codebook(&book, PairCoverage::Exhaustive).unwrap();
        checks.push((
            r.passed() && r.single_checks == users as u64 && r.pair_checks == pairs,
            format!(
                "({ones},{zeros},{users}) {} singles {} pairs",
                r.single_checks, r.pair_checks
            ),
        ));
    }

    let table = pascal(60);
    let mut closed_forms = true;
    for ones in 1..=50 {
        for zeros in 1..=5 {
            let cap = table[ones + zeros][zeros];
            let eff = code_efficiency(ones, zeros).unwrap();
            closed_forms &= max_users(ones, zeros) == cap
                && PilotCodebook::build(cap as usize + 1, ones, zeros).is_err()
                && eff.numer() * (ones + zeros) == eff.denom() * ones;
        }
    }
    checks.push((closed_forms, "capacity/efficiency l<=5 L'<=50".into()));
    Verdict::new(&checks)
}

fn reuse_gain_curve() -> Verdict {
    let params = OfdmParams::reference();
    let model = NetworkModel::new(16, 1.0, 16).unwrap();
    let gains: Vec<f64> = [0.0, 0.1, 0.2, 0.3]
        .iter()
        .map(|&p| reuse_gain(p, &model, &params).unwrap())
        .collect();
    let oracle = 320.0 / 21.0 * fifteen_sixteenths_pow15();
    Verdict::new(&[
        (gains.windows(2).all(|w| w[1] > w[0]), format!("G={gains:.4?}")),
        (
            (gains[0] - oracle).abs() <= GAIN_TOL,
            format!("G(0)={:.6} oracle={oracle:.6}", gains[0]),
        ),
    ])
}

fn determinism() -> Verdict {
    let small: [(Experiment, &[&str]); 5] = [
        (Experiment::Fig3, &[]),
        (Experiment::DetectSweep, &["trials=20000"]),
        (Experiment::RecoverBench, &["trials=12", "snr_db=inf,20"]),
        (Experiment::CodebookVerify, &["users=231", "zeros=2"]),
        (Experiment::Netsim, &["trials=20000"]),
    ];
    let mut checks = Vec::new();
    for (experiment, overrides) in small {
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        let config = ExperimentConfig::resolve(experiment, None, &overrides, Some(SEED)).unwrap();
        let runs: Vec<Vec<u8>> = [1, 2, 4, 1]
            .into_iter()
            .map(|threads| execute(&config, Some(threads)).unwrap().csv)
            .collect();
        let identical = runs.windows(2).all(|w| w[0] == w[1]);
        checks.push((identical, format!("{experiment}")));
    }
    Verdict::new(&checks)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 7] = [
        ("fig3-analytic", fig3_analytic),
        ("collision-mc", collision_grid),
        ("detection", detection),
        ("recovery", recovery),
        ("codebook", codebook),
        ("reuse-gain", reuse_gain_curve),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
