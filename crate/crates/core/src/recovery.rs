//! Sparse channel estimation from pilot-tone measurements.
//!
//! * [`dantzig_recover`]: the Dantzig selector
//!   `min ‖h‖₁  s.t.  ‖Xᴴ(y − sqrt(E) X h)‖∞ ≤ ε`, posed as a linear program;
//! * [`omp_recover`]: orthogonal matching pursuit, an independent greedy
//!   estimator used to cross-check the LP route;
//! * [`fde_ls_recover`]: the dense least-squares baseline that spends one
//!   pilot per coherence band.
//!
//! # Linear-program form
//!
//! The complex modulus is not polyhedral, so each tap is written as a
//! nonnegative combination of `P` unit phasors `exp(j 2π p / P)` and the
//! objective is the sum of the weights. That sum is the gauge of the regular
//! `P`-gon, which brackets `|h_k|` within a factor `1 / cos(π/P)`; `P = 4`
//! is the plain real/imaginary split `|Re h_k| + |Im h_k|`. The complex
//! ∞-norm bound is enforced on the inscribed square,
//! `|Re(·)| ≤ ε/√2` and `|Im(·)| ≤ ε/√2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::channel::{OfdmParams, SensingMatrix, SparseChannel};
use crate::linalg::least_squares;
use crate::lp::{LinearProgram, SimplexOptions, SolverStatus};
use crate::{Complex, Error, Result};

/// NMSE reported for an exact estimate.
pub const NMSE_FLOOR_DB: f64 = -200.0;

/// Relative cut for the recovered support: entries below this fraction of the
/// largest magnitude are treated as zero.
pub const RELATIVE_SUPPORT_CUT: f64 = 0.01;

/// How the Dantzig constraint level `ε` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    Explicit(f64),
    /// `ε = c · σ · sqrt(M) · sqrt(2 ln Wτmax)`: the typical size of
    /// `‖Xᴴ z‖∞` for noise of standard deviation `σ` on `M` tones.
    Scaled {
        c: f64,
        noise_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DantzigConfig {
    pub epsilon: EpsilonRule,
    /// Least-squares refit on the recovered support.
    pub debias: bool,
    /// Absolute magnitude below which an entry is dropped from the support.
    pub magnitude_floor: f64,
    /// Phasors per tap in the polygonal ℓ₁ norm (at least 4, multiple of 4).
    pub phasors: usize,
    pub solver: SimplexOptions,
}

impl DantzigConfig {
    pub const DEFAULT_PHASORS: usize = 8;

    pub fn explicit(epsilon: f64) -> Self {
        Self {
            epsilon: EpsilonRule::Explicit(epsilon),
            debias: false,
            magnitude_floor: 0.0,
            phasors: Self::DEFAULT_PHASORS,
            solver: SimplexOptions::default(),
        }
    }

    /// Scaled rule with `c = 1`.
    pub fn scaled(noise_std: f64) -> Self {
        Self {
            epsilon: EpsilonRule::Scaled { c: 1.0, noise_std },
            ..Self::explicit(1.0)
        }
    }

    pub fn with_debias(mut self, debias: bool) -> Self {
        self.debias = debias;
        self
    }

    pub fn with_magnitude_floor(mut self, floor: f64) -> Self {
        self.magnitude_floor = floor;
        self
    }

    pub fn with_phasors(mut self, phasors: usize) -> Self {
        self.phasors = phasors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.epsilon {
            EpsilonRule::Explicit(eps) if !(eps > 0.0 && eps.is_finite()) => {
                return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
            }
            EpsilonRule::Scaled { c, noise_std } if !(c > 0.0 && noise_std >= 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "scaled ε needs c > 0 and σ ≥ 0, got c={c}, σ={noise_std}"
                )));
            }
            _ => {}
        }
        if self.magnitude_floor.is_nan() || self.magnitude_floor < 0.0 {
            return Err(Error::InvalidParameter(
                "magnitude floor must be nonnegative".into(),
            ));
        }
        if self.phasors < 4 || !self.phasors.is_multiple_of(4) {
            return Err(Error::InvalidParameter(format!(
                "phasor count must be a positive multiple of 4, got {}",
                self.phasors
            )));
        }
        Ok(())
    }

    /// Constraint level for `pilot_count` tones and `tap_count` taps.
    pub fn resolve_epsilon(&self, pilot_count: usize, tap_count: usize) -> f64 {
        match self.epsilon {
            EpsilonRule::Explicit(eps) => eps,
            EpsilonRule::Scaled { c, noise_std } => {
                let log_term = (2.0 * (tap_count.max(2) as f64).ln()).sqrt();
                c * noise_std * (pilot_count as f64).sqrt() * log_term
            }
        }
    }
}

/// Which estimator produced a [`RecoveryResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dantzig,
    Omp,
    FdeLeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub method: Method,
    pub estimate: DVector<Complex>,
    /// Sorted indices of the taps considered present.
    pub recovered_support: Vec<usize>,
    /// Filled in by [`RecoveryResult::evaluate`].
    pub nmse_db: Option<f64>,
    pub solver_status: SolverStatus,
    /// ℓ₁-type objective of the LP (polygonal norm of the raw solution);
    /// ℓ₂ residual norm for the least-squares estimators.
    pub objective_value: f64,
    /// Simplex pivots or greedy iterations.
    pub iterations: usize,
}

impl RecoveryResult {
    /// Computes and stores the NMSE against the true channel.
    pub fn evaluate(&mut self, truth: &SparseChannel) -> Result<f64> {
        let value = nmse(truth.taps(), &self.estimate)?;
        self.nmse_db = Some(value);
        Ok(value)
    }

    pub fn support_matches(&self, truth: &SparseChannel) -> bool {
        self.recovered_support == truth.support()
    }
}

/// `10 log10(‖ĥ − h‖² / ‖h‖²)`, floored at [`NMSE_FLOOR_DB`].
pub fn nmse(truth: &DVector<Complex>, estimate: &DVector<Complex>) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            context: "estimate length",
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    let signal = truth.norm_squared();
    if signal == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let error = (estimate - truth).norm_squared();
    if error == 0.0 {
        return Ok(NMSE_FLOOR_DB);
    }
    Ok((10.0 * (error / signal).log10()).max(NMSE_FLOOR_DB))
}

/// Polygonal norm `Σ_k gauge_P(h_k)` minimized by the Dantzig LP.
pub fn polygonal_l1(h: &DVector<Complex>, phasors: usize) -> f64 {
    let sector = 2.0 * PI / phasors as f64;
    let half = sector / 2.0;
    h.iter()
        .map(|v| {
            if v.norm() == 0.0 {
                return 0.0;
            }
            let offset = v.arg().rem_euclid(sector);
            v.norm() * (offset - half).cos() / half.cos()
        })
        .sum()
}

/// Indices with magnitude above `max(floor, 0.01 · largest)`.
pub fn threshold_support(estimate: &DVector<Complex>, magnitude_floor: f64) -> Vec<usize> {
    let largest = estimate.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cut = magnitude_floor.max(RELATIVE_SUPPORT_CUT * largest);
    estimate
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > cut && v.norm() > 0.0)
        .map(|(i, _)| i)
        .collect()
}

fn check_dimensions(y: &DVector<Complex>, sensing: &SensingMatrix, params: &OfdmParams) -> Result<()> {
    if y.len() != sensing.rows() {
        return Err(Error::DimensionMismatch {
            context: "measurement length vs sensing rows",
            expected: sensing.rows(),
            found: y.len(),
        });
    }
    if sensing.tap_count() != params.tap_count {
        return Err(Error::DimensionMismatch {
            context: "sensing columns vs tap count",
            expected: params.tap_count,
            found: sensing.tap_count(),
        });
    }
    Ok(())
}

/// Least-squares fit of `y ≈ sqrt(E) X_S c` on the columns `support`,
/// scattered into a full-length estimate.
fn refit(
    y: &DVector<Complex>,
    sensing: &DMatrix<Complex>,
    energy: f64,
    support: &[usize],
) -> Result<(DVector<Complex>, f64)> {
    let mut estimate = DVector::zeros(sensing.ncols());
    if support.is_empty() {
        return Ok((estimate, y.norm()));
    }
    let columns = sensing.select_columns(support) * Complex::from(energy.sqrt());
    let coeffs = least_squares(&columns, y)?;
    let residual = (y - &columns * &coeffs).norm();
    for (&k, c) in support.iter().zip(coeffs.iter()) {
        estimate[k] = *c;
    }
    Ok((estimate, residual))
}

/// Builds the Dantzig program. Variables are the phasor weights, tap-major:
/// `a[k * P + p] ≥ 0` with `h_k = Σ_p a[k P + p] exp(j 2π p / P)`.
fn dantzig_program(
    y: &DVector<Complex>,
    sensing: &DMatrix<Complex>,
    energy: f64,
    epsilon: f64,
    phasors: usize,
) -> LinearProgram {
    let taps = sensing.ncols();
    let gram = sensing.adjoint() * sensing * Complex::from(energy.sqrt());
    let correlation = sensing.adjoint() * y;
    let atoms: Vec<Complex> = (0..phasors)
        .map(|p| Complex::from_polar(1.0, 2.0 * PI * p as f64 / phasors as f64))
        .collect();
    let width = taps * phasors;
    let bound = epsilon / std::f64::consts::SQRT_2;

    let mut lp = LinearProgram::new(vec![1.0; width]);
    let mut re_row = vec![0.0; width];
    let mut im_row = vec![0.0; width];
    for i in 0..taps {
        // w_i = b_i − sqrt(E) (G a)_i; its real and imaginary parts are
        // boxed by ±ε/√2.
        for k in 0..taps {
            let g = gram[(i, k)];
            for (p, atom) in atoms.iter().enumerate() {
                let v = g * atom;
                re_row[k * phasors + p] = v.re;
                im_row[k * phasors + p] = v.im;
            }
        }
        let b = correlation[i];
        for (row, target) in [(&re_row, b.re), (&im_row, b.im)] {
            lp.add_constraint(row, bound + target);
            let negated: Vec<f64> = row.iter().map(|v| -v).collect();
            lp.add_constraint(&negated, bound - target);
        }
    }
    lp
}

/// Dantzig-selector estimate of the channel.
///
/// Returns [`Error::Solver`] when the program is infeasible (`ε` too small
/// for an overdetermined system) or the pivot budget runs out.
pub fn dantzig_recover(
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
    config: &DantzigConfig,
) -> Result<RecoveryResult> {
    check_dimensions(y, sensing, params)?;
    config.validate()?;
    let energy = params.symbol_energy;
    let epsilon = config.resolve_epsilon(sensing.rows(), sensing.tap_count());
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "resolved ε must be positive, got {epsilon}"
        )));
    }
    let x = sensing.matrix();
    let lp = dantzig_program(y, x, energy, epsilon, config.phasors);
    let solution = lp.solve_with(&config.solver);
    if solution.status != SolverStatus::Optimal {
        return Err(Error::Solver(solution.status));
    }

    let phasors = config.phasors;
    let raw = DVector::from_fn(x.ncols(), |k, _| {
        (0..phasors)
            .map(|p| Complex::from_polar(solution.x[k * phasors + p], 2.0 * PI * p as f64 / phasors as f64))
            .sum()
    });
    let result = RecoveryResult {
        method: Method::Dantzig,
        recovered_support: threshold_support(&raw, config.magnitude_floor),
        estimate: raw,
        nmse_db: None,
        solver_status: solution.status,
        objective_value: solution.objective,
        iterations: solution.iterations,
    };
    if config.debias {
        debias(&result, y, sensing, params)
    } else {
        Ok(result)
    }
}

/// Least-squares refit of an estimate on its recovered support, everything
/// else zeroed. A support larger than the number of tones is cut to its
/// largest entries first.
pub fn debias(
    result: &RecoveryResult,
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
) -> Result<RecoveryResult> {
    check_dimensions(y, sensing, params)?;
    let raw = &result.estimate;
    let mut support = result.recovered_support.clone();
    if support.len() > sensing.rows() {
        support.sort_by(|&a, &b| raw[b].norm().total_cmp(&raw[a].norm()).then(a.cmp(&b)));
        support.truncate(sensing.rows());
        support.sort_unstable();
    }
    let (estimate, _) = refit(y, sensing.matrix(), params.symbol_energy, &support)?;
    Ok(RecoveryResult {
        estimate,
        recovered_support: support,
        nmse_db: None,
        ..result.clone()
    })
}

/// Orthogonal matching pursuit with exactly `sparsity` greedy steps, each
/// followed by a least-squares refit on the selected columns. Ties in the
/// correlation pick the smallest index.
pub fn omp_recover(
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
    sparsity: usize,
) -> Result<RecoveryResult> {
    check_dimensions(y, sensing, params)?;
    if sparsity > sensing.rows() {
        return Err(Error::InvalidParameter(format!(
            "sparsity {sparsity} exceeds the {} measurements",
            sensing.rows()
        )));
    }
    let x = sensing.matrix();
    let energy = params.symbol_energy;
    let mut selected: Vec<usize> = Vec::with_capacity(sparsity);
    let mut estimate = DVector::zeros(x.ncols());
    let mut residual = y.clone();
    for _ in 0..sparsity {
        let correlation = x.adjoint() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in correlation.iter().enumerate() {
            if selected.contains(&k) {
                continue;
            }
            let score = c.norm();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((k, score));
            }
        }
        let Some((k, _)) = best else { break };
        selected.push(k);
        let mut sorted = selected.clone();
        sorted.sort_unstable();
        let (fit, _) = refit(y, x, energy, &sorted)?;
        residual = y - x * &fit * Complex::from(energy.sqrt());
        estimate = fit;
    }
    selected.sort_unstable();
    Ok(RecoveryResult {
        method: Method::Omp,
        objective_value: residual.norm(),
        estimate,
        recovered_support: selected,
        nmse_db: None,
        solver_status: SolverStatus::Optimal,
        iterations: sparsity,
    })
}

/// Dense least-squares estimate over all taps; needs at least `Wτmax`
/// well-conditioned tones (one per coherence band, see
/// [`crate::channel::equispaced_tones`]).
pub fn fde_ls_recover(
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
) -> Result<RecoveryResult> {
    check_dimensions(y, sensing, params)?;
    if sensing.rows() < sensing.tap_count() {
        return Err(Error::DimensionMismatch {
            context: "frequency-domain LS needs one tone per tap",
            expected: sensing.tap_count(),
            found: sensing.rows(),
        });
    }
    let all: Vec<usize> = (0..sensing.tap_count()).collect();
    let (estimate, residual) = match refit(y, sensing.matrix(), params.symbol_energy, &all) {
        Err(Error::RankDeficient { .. }) => return Err(Error::SingularSystem),
        other => other?,
    };
    Ok(RecoveryResult {
        method: Method::FdeLeastSquares,
        recovered_support: threshold_support(&estimate, 0.0),
        estimate,
        nmse_db: None,
        solver_status: SolverStatus::Optimal,
        objective_value: residual,
        iterations: 1,
    })
}

/// `‖Xᴴ(y − sqrt(E) X h)‖∞` in the complex modulus.
pub fn correlated_residual(
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
    h: &DVector<Complex>,
) -> f64 {
    let x = sensing.matrix();
    let r = y - x * h * Complex::from(params.symbol_energy.sqrt());
    (x.adjoint() * r).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Same as [`correlated_residual`] but on the real and imaginary parts
/// separately, which is what the LP constrains.
pub fn correlated_residual_parts(
    y: &DVector<Complex>,
    sensing: &SensingMatrix,
    params: &OfdmParams,
    h: &DVector<Complex>,
) -> f64 {
    let x = sensing.matrix();
    let r = y - x * h * Complex::from(params.symbol_energy.sqrt());
    (x.adjoint() * r)
        .iter()
        .map(|v| v.re.abs().max(v.im.abs()))
        .fold(0.0, f64::max)
}
