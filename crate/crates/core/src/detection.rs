//! Energy-based detection of an active UE at a massive-MIMO base station.
//!
//! A UE sends the on/off symbol `s ∈ {0, 1}`; the base station observes
//! `y = sqrt(gP) h s + z` on `M_BS` antennas with `h, z ~ CN(0, I)` and
//! compares the per-antenna energy `‖y‖² / M_BS` against a threshold.
//!
//! Under `s = 0` the energy is `Gamma(M_BS, 1/M_BS)`. Under `s = 1` each
//! antenna sees `CN(0, 1 + gP)`, so the energy is `Gamma(M_BS, (1 + gP)/M_BS)`.
//! The error-minimizing threshold (equal priors) is where the two densities
//! cross, which works out to `(1 + gP) ln(1 + gP) / gP` for every `M_BS`.

use rand::Rng;
use rayon::prelude::*;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::channel::complex_normal;
use crate::rng::trial_stream;
use crate::stats::Estimate;
use crate::{Complex, Error, Result};

/// Bisection stops once the bracket is narrower than this.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    /// Base-station antennas `M_BS`.
    pub antenna_count: usize,
    /// Received power product `gP` (path loss times transmit power).
    pub pathloss_power: f64,
    /// Fixed threshold; the optimal one is used when absent.
    pub threshold: Option<f64>,
    /// Prior probability that the UE transmits (`s = 1`).
    pub prior_active: f64,
}

impl DetectionConfig {
    pub fn new(antenna_count: usize, pathloss_power: f64) -> Result<Self> {
        let cfg = Self {
            antenna_count,
            pathloss_power,
            threshold: None,
            prior_active: 0.5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = Some(threshold);
        self.validate()?;
        Ok(self)
    }

    pub fn with_prior(mut self, prior_active: f64) -> Result<Self> {
        self.prior_active = prior_active;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antenna_count == 0 {
            return Err(Error::InvalidParameter("antenna count must be at least 1".into()));
        }
        if !(self.pathloss_power >= 0.0 && self.pathloss_power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "received power gP must be nonnegative, got {}",
                self.pathloss_power
            )));
        }
        if !(0.0..=1.0).contains(&self.prior_active) {
            return Err(Error::InvalidParameter(format!(
                "prior must lie in [0, 1], got {}",
                self.prior_active
            )));
        }
        if let Some(eta) = self.threshold {
            if !(eta > 1.0 && eta < 1.0 + self.pathloss_power) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {eta} outside (1, {})",
                    1.0 + self.pathloss_power
                )));
            }
        }
        Ok(())
    }

    /// The configured threshold, else the optimal one. With `gP = 0` the two
    /// hypotheses coincide and every threshold is equally bad; the noise
    /// mean 1 is used.
    pub fn resolve_threshold(&self) -> Result<f64> {
        if let Some(eta) = self.threshold {
            return Ok(eta);
        }
        match optimal_threshold(self) {
            Err(Error::NoThresholdRoot { .. }) if self.pathloss_power == 0.0 => Ok(1.0),
            other => other,
        }
    }

    fn energy_scale(&self, active: bool) -> f64 {
        let m = self.antenna_count as f64;
        if active {
            (1.0 + self.pathloss_power) / m
        } else {
            1.0 / m
        }
    }
}

/// Per-antenna received energy `‖y‖² / M_BS`.
pub fn energy_metric(received: &[Complex]) -> f64 {
    if received.is_empty() {
        return 0.0;
    }
    received.iter().map(|v| v.norm_sqr()).sum::<f64>() / received.len() as f64
}

/// Hard decision: active iff the energy strictly exceeds the threshold.
pub fn detect(energy: f64, threshold: f64) -> bool {
    energy > threshold
}

fn gamma_ln_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma(shape)
}

/// Threshold minimizing the equal-prior error probability: the crossing of
/// the idle and active energy densities on `(1, 1 + gP)`, by bisection.
pub fn optimal_threshold(config: &DetectionConfig) -> Result<f64> {
    config.validate()?;
    let gp = config.pathloss_power;
    let no_root = || Error::NoThresholdRoot { pathloss_power: gp };
    if gp <= 0.0 {
        return Err(no_root());
    }
    let shape = config.antenna_count as f64;
    let (idle, active) = (config.energy_scale(false), config.energy_scale(true));
    let gap = |x: f64| gamma_ln_pdf(x, shape, idle) - gamma_ln_pdf(x, shape, active);

    let (mut lo, mut hi) = (1.0, 1.0 + gp);
    let (g_lo, g_hi) = (gap(lo), gap(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(no_root());
    }
    while hi - lo > THRESHOLD_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = 0.5 * (lo + hi);
    if eta > 1.0 && eta < 1.0 + gp {
        Ok(eta)
    } else {
        Err(no_root())
    }
}

/// Analytic error probability of the rule `energy > threshold` under the
/// configured prior.
pub fn error_probability(config: &DetectionConfig, threshold: f64) -> Result<f64> {
    config.validate()?;
    let shape = config.antenna_count as f64;
    let false_alarm = gamma_ur(shape, threshold / config.energy_scale(false));
    let miss = gamma_lr(shape, threshold / config.energy_scale(true));
    Ok((1.0 - config.prior_active) * false_alarm + config.prior_active * miss)
}

/// One received vector under the signal model.
pub fn sample_received<R: Rng + ?Sized>(config: &DetectionConfig, active: bool, rng: &mut R) -> Vec<Complex> {
    let amplitude = config.pathloss_power.sqrt();
    (0..config.antenna_count)
        .map(|_| {
            let z = complex_normal(rng, 1.0);
            if active {
                complex_normal(rng, 1.0) * amplitude + z
            } else {
                z
            }
        })
        .collect()
}

/// Monte-Carlo detection error rate. Trial `i` draws `s` from the prior, then
/// the channel and noise, all from stream `i` of `seed`.
pub fn error_probability_mc(config: &DetectionConfig, trials: u64, seed: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let threshold = config.resolve_threshold()?;
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(seed, i);
            let active = rng.random_bool(config.prior_active);
            let energy = energy_metric(&sample_received(config, active, &mut rng));
            u64::from(detect(energy, threshold) != active)
        })
        .sum();
    Ok(Estimate::proportion(errors, trials))
}

/// Network-wide threshold: the smallest per-UE optimal threshold. With a cap,
/// only thresholds whose own error probability is at most `max_error` count
/// as qualified.
pub fn min_threshold_for_network(
    pathloss_powers: &[f64],
    antenna_count: usize,
    max_error: Option<f64>,
) -> Result<f64> {
    if pathloss_powers.is_empty() {
        return Err(Error::EmptyInput("path-loss power list"));
    }
    let mut best: Option<f64> = None;
    for &gp in pathloss_powers {
        if gp.is_nan() || gp <= 0.0 {
            return Err(Error::InvalidParameter(format!("gP must be positive, got {gp}")));
        }
        let cfg = DetectionConfig::new(antenna_count, gp)?;
        let eta = optimal_threshold(&cfg)?;
        if let Some(cap) = max_error {
            if error_probability(&cfg, eta)? > cap {
                continue;
            }
        }
        best = Some(best.map_or(eta, |b: f64| b.min(eta)));
    }
    best.ok_or(Error::NoQualifiedThreshold {
        cap: max_error.unwrap_or(f64::NAN),
    })
}
