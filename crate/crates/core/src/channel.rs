//! OFDM parameters, sparse multipath channels and the pilot measurement
//! model.
//!
//! A UE transmits pilots with symbol energy `E` on a set of `M` tones out of
//! the `WT` subcarriers. After matched filtering at the base station the
//! tone outputs are
//!
//! ```text
//! y = sqrt(E) * X * h + z
//! ```
//!
//! where `h` holds the `Wτmax` sampled channel taps (only `S` of them
//! nonzero) and row `n` of the sensing matrix `X` is the length-`Wτmax`
//! prefix of the `n`-th row of the `WT`-point DFT matrix.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Complex, Error, Result};

/// OFDM numerology and channel sparsity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    /// Number of subcarriers `WT`.
    pub bandwidth_time_product: usize,
    /// Number of resolvable delay taps `Wτmax`.
    pub tap_count: usize,
    /// Number of significant taps `S`.
    pub sparsity: usize,
    /// Pilot tones per UE `M`.
    pub pilot_count: usize,
    /// Pilot symbol energy `E`.
    pub symbol_energy: f64,
}

impl OfdmParams {
    /// Parameters with the default pilot budget `M = 5 S` and unit energy.
    pub fn new(bandwidth_time_product: usize, tap_count: usize, sparsity: usize) -> Result<Self> {
        let params = Self {
            bandwidth_time_product,
            tap_count,
            sparsity,
            pilot_count: 5 * sparsity,
            symbol_energy: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    /// 1000 subcarriers, 100 taps, 4 significant taps, 20 pilot tones.
    pub fn reference() -> Self {
        Self {
            bandwidth_time_product: 1000,
            tap_count: 100,
            sparsity: 4,
            pilot_count: 20,
            symbol_energy: 1.0,
        }
    }

    pub fn with_pilot_count(mut self, pilot_count: usize) -> Result<Self> {
        self.pilot_count = pilot_count;
        self.validate()?;
        Ok(self)
    }

    pub fn with_symbol_energy(mut self, symbol_energy: f64) -> Result<Self> {
        self.symbol_energy = symbol_energy;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.sparsity == 0 || self.tap_count == 0 || self.bandwidth_time_product == 0 {
            return invalid("subcarriers, taps and sparsity must be positive".into());
        }
        if self.sparsity > self.tap_count || self.tap_count > self.bandwidth_time_product {
            return invalid(format!(
                "need S <= Wτmax <= WT, got S={}, Wτmax={}, WT={}",
                self.sparsity, self.tap_count, self.bandwidth_time_product
            ));
        }
        if self.pilot_count < self.sparsity || self.pilot_count > self.bandwidth_time_product {
            return invalid(format!(
                "need S <= M <= WT, got M={} (S={}, WT={})",
                self.pilot_count, self.sparsity, self.bandwidth_time_product
            ));
        }
        if !(self.symbol_energy.is_finite() && self.symbol_energy > 0.0) {
            return invalid(format!(
                "symbol energy must be positive, got {}",
                self.symbol_energy
            ));
        }
        Ok(())
    }
}

/// Sampled channel with a known set of nonzero taps.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseChannel {
    taps: DVector<Complex>,
    support: Vec<usize>,
}

impl SparseChannel {
    /// Builds a channel from a full tap vector; the support is every exactly
    /// nonzero entry.
    pub fn from_taps(taps: DVector<Complex>) -> Self {
        let support = taps
            .iter()
            .enumerate()
            .filter(|(_, g)| **g != Complex::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect();
        Self { taps, support }
    }

    /// Builds a length-`tap_count` channel from `(delay, gain)` pairs.
    pub fn from_paths(tap_count: usize, paths: &[(usize, Complex)]) -> Result<Self> {
        let mut taps = DVector::zeros(tap_count);
        for &(delay, gain) in paths {
            if delay >= tap_count {
                return Err(Error::InvalidParameter(format!(
                    "delay {delay} outside [0, {tap_count})"
                )));
            }
            taps[delay] += gain;
        }
        Ok(Self::from_taps(taps))
    }

    pub fn taps(&self) -> &DVector<Complex> {
        &self.taps
    }

    /// Sorted indices of the nonzero taps.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Total channel energy `‖h‖²`.
    pub fn energy(&self) -> f64 {
        self.taps.norm_squared()
    }
}

/// Partial DFT matrix for a set of pilot tones.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    matrix: DMatrix<Complex>,
    tones: Vec<usize>,
    bandwidth_time_product: usize,
}

impl SensingMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.matrix
    }

    /// Pilot tones in ascending order; row `i` belongs to `tones()[i]`.
    pub fn tones(&self) -> &[usize] {
        &self.tones
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tap_count(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn bandwidth_time_product(&self) -> usize {
        self.bandwidth_time_product
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(scale * re, scale * im)
}

/// Draws an `S`-sparse channel: a uniform random support of size `S` with
/// i.i.d. unit-variance complex Gaussian gains.
pub fn sample_channel<R: Rng + ?Sized>(params: &OfdmParams, rng: &mut R) -> Result<SparseChannel> {
    params.validate()?;
    let mut support = index::sample(rng, params.tap_count, params.sparsity).into_vec();
    support.sort_unstable();
    let mut taps = DVector::zeros(params.tap_count);
    for &d in &support {
        // an exactly-zero gain would shrink the support
        let mut g = complex_normal(rng, 1.0);
        while g.norm_sqr() == 0.0 {
            g = complex_normal(rng, 1.0);
        }
        taps[d] = g;
    }
    Ok(SparseChannel { taps, support })
}

/// Picks `M` distinct pilot tones uniformly among the tones not in
/// `exclude`, returned in ascending order.
pub fn select_pilot_tones<R: Rng + ?Sized>(
    params: &OfdmParams,
    exclude: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let available: Vec<usize> = (0..params.bandwidth_time_product)
        .filter(|n| !exclude.contains(n))
        .collect();
    if available.len() < params.pilot_count {
        return Err(Error::InsufficientTones {
            available: available.len(),
            requested: params.pilot_count,
        });
    }
    let mut tones: Vec<usize> = index::sample(rng, available.len(), params.pilot_count)
        .into_iter()
        .map(|i| available[i])
        .collect();
    tones.sort_unstable();
    Ok(tones)
}

/// `Wτmax` tones spaced one coherence bandwidth apart, the classic
/// frequency-domain equalization pilot grid.
pub fn equispaced_tones(params: &OfdmParams) -> Vec<usize> {
    let wt = params.bandwidth_time_product;
    let taps = params.tap_count;
    (0..taps).map(|i| i * wt / taps).collect()
}

/// Builds the sensing matrix for `tones`: entry `(n, d)` is
/// `exp(-j 2π n d / WT)`.
pub fn build_sensing_matrix(tones: &[usize], params: &OfdmParams) -> Result<SensingMatrix> {
    let wt = params.bandwidth_time_product;
    let mut sorted = tones.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("pilot tones must be distinct".into()));
    }
    if let Some(&n) = sorted.last() {
        if n >= wt {
            return Err(Error::InvalidParameter(format!("tone {n} outside [0, {wt})")));
        }
    }
    let matrix = DMatrix::from_fn(sorted.len(), params.tap_count, |row, d| {
        // Reduce the phase index modulo WT before scaling to keep full
        // precision for large tone indices.
        let k = (sorted[row] * d) % wt;
        Complex::from_polar(1.0, -2.0 * PI * k as f64 / wt as f64)
    });
    Ok(SensingMatrix {
        matrix,
        tones: sorted,
        bandwidth_time_product: wt,
    })
}

/// Noisy matched-filter outputs `sqrt(E) X h + z`, `z ~ CN(0, σ² I)`.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    sensing: &SensingMatrix,
    channel: &SparseChannel,
    params: &OfdmParams,
    noise_variance: f64,
    rng: &mut R,
) -> Result<DVector<Complex>> {
    if sensing.tap_count() != channel.len() {
        return Err(Error::DimensionMismatch {
            context: "channel length vs sensing matrix columns",
            expected: sensing.tap_count(),
            found: channel.len(),
        });
    }
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be nonnegative, got {noise_variance}"
        )));
    }
    let mut y = sensing.matrix() * channel.taps() * Complex::from(params.symbol_energy.sqrt());
    if noise_variance > 0.0 {
        for v in y.iter_mut() {
            *v += complex_normal(rng, noise_variance);
        }
    }
    Ok(y)
}
