//! Network-level analysis of aggressive pilot reuse.
//!
//! A group of `K_G` UEs shares one set of pilot dimensions. Each UE is in
//! coverage with probability `α` and then lands in one of `N` cells
//! uniformly. Cells holding exactly one UE of the group can be trained
//! without collision; everything else in this module follows from the
//! distribution of that singleton count.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::OfdmParams;
use crate::rng::trial_stream;
use crate::stats::Estimate;
use crate::{Error, Result};

/// Relative tolerance under which two expected singleton counts are a tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkModel {
    /// `N`.
    pub cell_count: usize,
    /// `α = 1 − p_out`.
    pub coverage_prob: f64,
    /// `K_G`.
    pub group_size: usize,
}

impl NetworkModel {
    pub fn new(cell_count: usize, coverage_prob: f64, group_size: usize) -> Result<Self> {
        let model = Self {
            cell_count,
            coverage_prob,
            group_size,
        };
        model.validate()?;
        Ok(model)
    }

    /// Model parameterised by outage probability instead of coverage.
    pub fn with_outage(cell_count: usize, outage_prob: f64, group_size: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&outage_prob) {
            return Err(Error::InvalidParameter(format!(
                "outage probability must lie in [0, 1), got {outage_prob}"
            )));
        }
        Self::new(cell_count, 1.0 - outage_prob, group_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count == 0 {
            return Err(Error::InvalidParameter("cell count must be positive".into()));
        }
        if !(self.coverage_prob > 0.0 && self.coverage_prob <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "coverage probability must lie in (0, 1], got {}",
                self.coverage_prob
            )));
        }
        if self.group_size == 0 {
            return Err(Error::InvalidParameter("group size must be positive".into()));
        }
        Ok(())
    }

    pub fn outage_prob(&self) -> f64 {
        1.0 - self.coverage_prob
    }

    fn per_cell(&self) -> f64 {
        self.coverage_prob / self.cell_count as f64
    }
}

/// One random placement of a UE group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementOutcome {
    /// Cell index per UE, `None` when the UE is in outage.
    pub cell_of_ue: Vec<Option<usize>>,
    /// Cells holding exactly one UE.
    pub singleton_count: usize,
}

pub fn place_ues<R: Rng + ?Sized>(model: &NetworkModel, rng: &mut R) -> Result<PlacementOutcome> {
    model.validate()?;
    let cell_of_ue: Vec<Option<usize>> = (0..model.group_size)
        .map(|_| {
            rng.random_bool(model.coverage_prob)
                .then(|| rng.random_range(0..model.cell_count))
        })
        .collect();
    Ok(PlacementOutcome {
        singleton_count: count_singletons(&cell_of_ue, model.cell_count),
        cell_of_ue,
    })
}

fn count_singletons(cell_of_ue: &[Option<usize>], cells: usize) -> usize {
    let mut occupancy = vec![0u32; cells];
    for c in cell_of_ue.iter().flatten() {
        occupancy[*c] += 1;
    }
    occupancy.iter().filter(|&&n| n == 1).count()
}

/// `E[X] = α K_G (1 − α/N)^(K_G − 1)`.
pub fn expected_singletons(model: &NetworkModel) -> f64 {
    let k = model.group_size as f64;
    model.coverage_prob * k * (1.0 - model.per_cell()).powf(k - 1.0)
}

/// Variance of the singleton count.
pub fn singletons_variance(model: &NetworkModel) -> f64 {
    let n = model.cell_count as f64;
    let k = model.group_size as f64;
    let a = model.per_cell();
    let one = k * a * (1.0 - a).powf(k - 1.0);
    let two = if model.group_size >= 2 {
        k * (k - 1.0) * a * a * (1.0 - 2.0 * a).max(0.0).powf(k - 2.0)
    } else {
        0.0
    };
    (n * one + n * (n - 1.0) * two - (n * one).powi(2)).max(0.0)
}

/// Probability that a given UE of the group is not trained collision-free.
pub fn collision_probability(model: &NetworkModel) -> f64 {
    1.0 - model.coverage_prob * (1.0 - model.per_cell()).powf(model.group_size as f64 - 1.0)
}

/// Integer `K_G` maximising the expected singleton count, scanning
/// `[1, ⌈10 N / α⌉]`. Near-equal values resolve toward the larger group.
pub fn optimal_group_size(model: &NetworkModel) -> Result<usize> {
    model.validate()?;
    let upper = (10.0 * model.cell_count as f64 / model.coverage_prob).ceil() as usize;
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..=upper.max(1) {
        let value = expected_singletons(&NetworkModel {
            group_size: k,
            ..*model
        });
        if value >= best.1 * (1.0 - TIE_TOLERANCE) {
            best = (k, value.max(best.1));
        }
    }
    Ok(best.0)
}

/// Number of whole UE groups fitting in the band, `⌊WT / L⌋`.
pub fn group_count(bandwidth_time_product: usize, dimensions: usize) -> Result<usize> {
    if dimensions == 0 {
        return Err(Error::InvalidParameter(
            "pilot dimensions must be positive".into(),
        ));
    }
    Ok(bandwidth_time_product / dimensions)
}

/// UEs trained per slot under aggressive reuse with `L` pilot dimensions
/// per group, `(WT / L) E[X]`. The group count is not floored.
pub fn rho_aggressive(model: &NetworkModel, bandwidth_time_product: usize, dimensions: usize) -> Result<f64> {
    model.validate()?;
    if dimensions == 0 {
        return Err(Error::InvalidParameter(
            "pilot dimensions must be positive".into(),
        ));
    }
    Ok(bandwidth_time_product as f64 * expected_singletons(model) / dimensions as f64)
}

/// The four multiplexing figures of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoMetrics {
    /// Orthogonal pilots, one per coherence band.
    pub fq: f64,
    /// Orthogonal pilots, `M` tones per UE.
    pub cs: f64,
    /// Aggressive reuse over `Wτ + 1` dimensions.
    pub ag_fq: f64,
    /// Aggressive reuse over `M + 1` dimensions.
    pub ag_cs: f64,
}

/// Multiplexing metrics for single-zero codes (`L = Wτ + 1` or `M + 1`).
pub fn rho_metrics(model: &NetworkModel, params: &OfdmParams) -> Result<RhoMetrics> {
    params.validate()?;
    let wt = params.bandwidth_time_product as f64;
    let alpha = model.coverage_prob;
    Ok(RhoMetrics {
        fq: wt * alpha / params.tap_count as f64,
        cs: wt * alpha / params.pilot_count as f64,
        ag_fq: rho_aggressive(model, params.bandwidth_time_product, params.tap_count + 1)?,
        ag_cs: rho_aggressive(model, params.bandwidth_time_product, params.pilot_count + 1)?,
    })
}

/// Gain of aggressive over orthogonal compressed-sensing pilots at outage
/// probability `p_out`; `N` and `K_G` come from `model`.
pub fn reuse_gain(outage_prob: f64, model: &NetworkModel, params: &OfdmParams) -> Result<f64> {
    let at = NetworkModel::with_outage(model.cell_count, outage_prob, model.group_size)?;
    params.validate()?;
    let m = params.pilot_count as f64;
    let k = at.group_size as f64;
    Ok(m * k / (m + 1.0) * (1.0 - at.per_cell()).powf(k - 1.0))
}

/// Monte-Carlo collision probability `1 − mean(X) / K_G` over independent
/// placements. The result does not depend on the number of worker threads.
pub fn collision_probability_mc(model: &NetworkModel, trials: u64, seed: u64) -> Result<Estimate> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::EmptyInput("trials"));
    }
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_stream(seed, t);
            let x = place_ues(model, &mut rng)
                .map(|p| p.singleton_count as u128)
                .unwrap_or(0);
            (x, x * x)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let k = model.group_size as f64;
    let mean = sum as f64 / n;
    let std_error = if trials > 1 {
        let var = ((sum_sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt() / k
    } else {
        0.0
    };
    Ok(Estimate {
        value: 1.0 - mean / k,
        std_error,
        samples: trials,
    })
}

/// Exact standard error of the Monte-Carlo collision estimate for `trials`
/// placements, from the singleton-count variance.
pub fn collision_standard_error(model: &NetworkModel, trials: u64) -> f64 {
    (singletons_variance(model) / trials as f64).sqrt() / model.group_size as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn model(n: usize, alpha: f64, k: usize) -> NetworkModel {
        NetworkModel::new(n, alpha, k).unwrap()
    }

    #[test]
    fn validation() {
        assert!(NetworkModel::new(0, 1.0, 1).is_err());
        assert!(NetworkModel::new(4, 0.0, 1).is_err());
        assert!(NetworkModel::new(4, 1.1, 1).is_err());
        assert!(NetworkModel::new(4, 1.0, 0).is_err());
        assert!(NetworkModel::with_outage(4, 1.0, 1).is_err());
        assert!((NetworkModel::with_outage(4, 0.3, 1).unwrap().coverage_prob - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_ue_single_cell() {
        let out = place_ues(&model(1, 1.0, 1), &mut seeded(0)).unwrap();
        assert_eq!(out.cell_of_ue, vec![Some(0)]);
        assert_eq!(out.singleton_count, 1);
    }

    #[test]
    fn coverage_rate() {
        let m = model(8, 0.01, 1);
        let trials = 100_000u64;
        let hits: u64 = (0..trials)
            .map(|t| {
                let out = place_ues(&m, &mut trial_stream(3, t)).unwrap();
                out.cell_of_ue[0].is_some() as u64
            })
            .sum();
        assert!(Estimate::proportion(hits, trials).agrees_with(0.01, 3.0));
    }

    #[test]
    fn singleton_mean_matches_closed_form() {
        let m = model(16, 0.7, 12);
        let samples: Vec<f64> = (0..100_000u64)
            .map(|t| place_ues(&m, &mut trial_stream(5, t)).unwrap().singleton_count as f64)
            .collect();
        let est = Estimate::from_samples(&samples);
        assert!(est.agrees_with(expected_singletons(&m), 3.0), "{est:?}");
        let var = singletons_variance(&m);
        let sample_var = est.std_error.powi(2) * samples.len() as f64;
        assert!((sample_var / var - 1.0).abs() < 0.02);
    }

    #[test]
    fn closed_forms() {
        // 16 (15/16)^15 and 0.7·12·(1 − 0.7/16)^11, evaluated independently
        assert!((expected_singletons(&model(16, 1.0, 16)) - 6.076_998_5).abs() < 1e-6);
        assert!((expected_singletons(&model(16, 0.7, 12)) - 5.135_293).abs() < 1e-6);
        assert!((expected_singletons(&model(16, 0.4, 1)) - 0.4).abs() < 1e-15);
        let big = expected_singletons(&model(1_000_000, 0.8, 10));
        assert!((big / 8.0 - 1.0).abs() < 1e-3);

        assert!((collision_probability(&model(16, 1.0, 16)) - 0.620_188).abs() < 1e-6);
        assert!((collision_probability(&model(16, 0.6, 1)) - 0.4).abs() < 1e-15);
        assert!(collision_probability(&model(16, 1.0, 1000)) > 0.999);
    }

    #[test]
    fn optimal_group_sizes() {
        assert_eq!(optimal_group_size(&model(16, 1.0, 1)).unwrap(), 16);
        assert_eq!(optimal_group_size(&model(16, 0.7, 1)).unwrap(), 22);
        assert_eq!(optimal_group_size(&model(1, 1.0, 1)).unwrap(), 1);
        assert_eq!(optimal_group_size(&model(4, 0.5, 1)).unwrap(), 8);
    }

    #[test]
    fn rho_reference_values() {
        let params = OfdmParams::reference();
        let r = rho_metrics(&model(16, 1.0, 16), &params).unwrap();
        assert_eq!(r.fq, 10.0);
        assert_eq!(r.cs, 50.0);
        assert!((r.ag_cs - 289.380_88).abs() < 1e-4);
        assert!((r.ag_cs / r.ag_fq - 101.0 / 21.0).abs() < 1e-12);

        let tiny = rho_metrics(&model(16, 1e-12, 16), &params).unwrap();
        for v in [tiny.fq, tiny.cs, tiny.ag_fq, tiny.ag_cs] {
            assert!(v.abs() < 1e-8);
        }
        assert_eq!(group_count(1000, 21).unwrap(), 47);
        assert!(group_count(1000, 0).is_err());
    }

    #[test]
    fn reuse_gain_values() {
        let params = OfdmParams::reference();
        let m = model(16, 1.0, 16);
        let g0 = reuse_gain(0.0, &m, &params).unwrap();
        assert!((g0 - 5.787_618).abs() < 1e-6);
        assert!(reuse_gain(0.3, &m, &params).unwrap() > g0);
        let at = model(16, 0.7, 16);
        let r = rho_metrics(&at, &params).unwrap();
        assert!((reuse_gain(0.3, &m, &params).unwrap() - r.ag_cs / r.cs).abs() < 1e-12);
        assert!(reuse_gain(1.0, &m, &params).is_err());
    }

    #[test]
    fn monte_carlo_collisions() {
        let m = model(16, 1.0, 16);
        let est = collision_probability_mc(&m, 100_000, 11).unwrap();
        assert!(est.agrees_with(collision_probability(&m), 3.0), "{est:?}");
        let se = collision_standard_error(&m, 100_000);
        assert!((est.std_error / se - 1.0).abs() < 0.05);

        let single = model(7, 0.6, 1);
        let est = collision_probability_mc(&single, 10_000, 2).unwrap();
        assert!(est.agrees_with(0.4, 3.0));

        let trivial = collision_probability_mc(&model(1, 1.0, 1), 1, 0).unwrap();
        assert_eq!(trivial.value, 0.0);
        assert!(collision_probability_mc(&m, 0, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let m = model(16, 0.7, 20);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| collision_probability_mc(&m, 5_000, 9).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
