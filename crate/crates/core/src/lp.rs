//! Dense simplex solver for small linear programs.
//!
//! Problems are stated in inequality form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x ≤ b,  x ≥ 0
//! ```
//!
//! and solved on a full tableau with one slack per row. The slack basis is
//! the starting point for both simplex variants:
//!
//! * `c ≥ 0`: the slack basis is dual feasible and the dual simplex runs to
//!   optimality directly (this is the case for every ℓ₁ program in the crate);
//! * `b ≥ 0`: the slack basis is primal feasible and the primal simplex runs;
//! * otherwise a dual simplex on the zero objective finds a feasible basis,
//!   then the primal simplex finishes with the real costs.
//!
//! Pricing is largest-violation; after a run of degenerate pivots the solver
//! falls back to Bland's smallest-index rule until progress resumes. The
//! final basic solution is recomputed from the original data with an LU
//! solve to shed the round-off accumulated in the tableau.

use nalgebra::{DMatrix, DVector};

/// Outcome of a simplex run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Feasibility, optimality and pivot tolerance.
    pub tolerance: f64,
    /// Pivot budget; `None` means 50 per structural variable.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots tolerated before switching to Bland's
    /// rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: None,
            degenerate_streak: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolverStatus,
    /// Structural variables; meaningful when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// `min cᵀx  s.t.  A x ≤ b, x ≥ 0`, with `A` stored densely by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    coefficients: Vec<f64>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            coefficients: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Appends the row `coefficients · x ≤ rhs`.
    ///
    /// # Panics
    ///
    /// If the row length differs from the number of variables.
    pub fn add_constraint(&mut self, coefficients: &[f64], rhs: f64) {
        assert_eq!(coefficients.len(), self.objective.len(), "constraint width");
        self.coefficients.extend_from_slice(coefficients);
        self.rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_vars();
        &self.coefficients[i * n..(i + 1) * n]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Largest violation of `A x ≤ b` and `x ≥ 0` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = (0..self.num_constraints()).map(|i| {
            let lhs: f64 = self.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            lhs - self.rhs[i]
        });
        rows.chain(x.iter().map(|v| -v)).fold(0.0, f64::max)
    }

    pub fn solve(&self) -> LpSolution {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, options: &SimplexOptions) -> LpSolution {
        let mut tableau = Tableau::new(self);
        let budget = options.max_iterations.unwrap_or(50 * self.num_vars().max(1));
        let mut pivots = Pivoting {
            options: *options,
            budget,
            iterations: 0,
        };
        let tol = options.tolerance;

        let dual_feasible = tableau.reduced.iter().all(|&d| d >= -tol);
        let primal_feasible = tableau.rhs.iter().all(|&b| b >= -tol);
        let status = if dual_feasible {
            pivots.dual(&mut tableau)
        } else if primal_feasible {
            pivots.primal(&mut tableau)
        } else {
            tableau.reduced.iter_mut().for_each(|d| *d = 0.0);
            match pivots.dual(&mut tableau) {
                SolverStatus::Optimal => {
                    tableau.price(&self.objective);
                    pivots.primal(&mut tableau)
                }
                other => other,
            }
        };

        let x = if status == SolverStatus::Optimal {
            tableau.refined_solution(self)
        } else {
            tableau.solution()
        };
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution {
            status,
            x,
            objective,
            iterations: pivots.iterations,
        }
    }
}

struct Tableau {
    n: usize,
    m: usize,
    width: usize,
    cells: Vec<f64>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let (n, m) = (lp.num_vars(), lp.num_constraints());
        let width = n + m;
        let mut cells = vec![0.0; m * width];
        for i in 0..m {
            cells[i * width..i * width + n].copy_from_slice(lp.row(i));
            cells[i * width + n + i] = 1.0;
        }
        let mut reduced = lp.objective.clone();
        reduced.resize(width, 0.0);
        Self {
            n,
            m,
            width,
            cells,
            rhs: lp.rhs.clone(),
            reduced,
            basis: (n..n + m).collect(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.width..(i + 1) * self.width]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, q);
        {
            let row = &mut self.cells[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v *= inv);
            row[q] = 1.0;
        }
        self.rhs[r] *= inv;

        let (before, rest) = self.cells.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let pivot_rhs = self.rhs[r];
        let eliminate = |row: &mut [f64], rhs: &mut f64| {
            let f = row[q];
            if f != 0.0 {
                row.iter_mut()
                    .zip(pivot_row.iter())
                    .for_each(|(v, p)| *v -= f * p);
                row[q] = 0.0;
                *rhs -= f * pivot_rhs;
            }
        };
        for (i, row) in before.chunks_exact_mut(w).enumerate() {
            eliminate(row, &mut self.rhs[i]);
        }
        for (k, row) in after.chunks_exact_mut(w).enumerate() {
            eliminate(row, &mut self.rhs[r + 1 + k]);
        }
        let f = self.reduced[q];
        if f != 0.0 {
            self.reduced
                .iter_mut()
                .zip(pivot_row.iter())
                .for_each(|(d, p)| *d -= f * p);
            self.reduced[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// Recomputes reduced costs for `objective` in the current basis.
    fn price(&mut self, objective: &[f64]) {
        let cost = |j: usize| if j < self.n { objective[j] } else { 0.0 };
        let mut reduced: Vec<f64> = (0..self.width).map(cost).collect();
        for i in 0..self.m {
            let cb = cost(self.basis[i]);
            if cb != 0.0 {
                reduced
                    .iter_mut()
                    .zip(self.row(i))
                    .for_each(|(d, t)| *d -= cb * t);
            }
        }
        for &b in &self.basis {
            reduced[b] = 0.0;
        }
        self.reduced = reduced;
    }

    fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs[i].max(0.0);
            }
        }
        x
    }

    /// Basic solution from `B x_B = b` on the original data.
    fn refined_solution(&self, lp: &LinearProgram) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        if m == 0 {
            return self.solution();
        }
        let basis_matrix = DMatrix::from_fn(m, m, |i, k| {
            let col = self.basis[k];
            if col < n {
                lp.row(i)[col]
            } else if col - n == i {
                1.0
            } else {
                0.0
            }
        });
        let b = DVector::from_column_slice(&lp.rhs);
        match basis_matrix.lu().solve(&b) {
            Some(xb) if xb.iter().all(|v| v.is_finite()) => {
                let mut x = vec![0.0; n];
                for (k, &col) in self.basis.iter().enumerate() {
                    if col < n {
                        x[col] = xb[k].max(0.0);
                    }
                }
                x
            }
            _ => self.solution(),
        }
    }
}

struct Pivoting {
    options: SimplexOptions,
    budget: usize,
    iterations: usize,
}

impl Pivoting {
    /// Primal simplex from a primal-feasible basis.
    fn primal(&mut self, t: &mut Tableau) -> SolverStatus {
        let tol = self.options.tolerance;
        let mut streak = 0;
        loop {
            let bland = streak >= self.options.degenerate_streak;
            let entering = if bland {
                (0..t.width).find(|&j| t.reduced[j] < -tol)
            } else {
                argmin((0..t.width).filter(|&j| t.reduced[j] < -tol), |j| t.reduced[j])
            };
            let Some(q) = entering else {
                return SolverStatus::Optimal;
            };
            if self.iterations >= self.budget {
                return SolverStatus::IterationLimit;
            }

            let candidates = (0..t.m)
                .filter(|&i| t.at(i, q) > tol)
                .map(|i| (i, t.rhs[i].max(0.0) / t.at(i, q)));
            let Some(r) = select_ratio(candidates, tol, bland, |i| (t.basis[i], t.at(i, q).abs())) else {
                return SolverStatus::Unbounded;
            };
            let step = t.rhs[r].max(0.0) / t.at(r, q);
            streak = if step <= tol { streak + 1 } else { 0 };
            t.pivot(r, q);
            self.iterations += 1;
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self, t: &mut Tableau) -> SolverStatus {
        let tol = self.options.tolerance;
        let mut streak = 0;
        loop {
            let bland = streak >= self.options.degenerate_streak;
            let infeasible = (0..t.m).filter(|&i| t.rhs[i] < -tol);
            let leaving = if bland {
                infeasible.min_by_key(|&i| t.basis[i])
            } else {
                argmin(infeasible, |i| t.rhs[i])
            };
            let Some(r) = leaving else {
                return SolverStatus::Optimal;
            };
            if self.iterations >= self.budget {
                return SolverStatus::IterationLimit;
            }

            let row = t.row(r);
            let candidates = (0..t.width)
                .filter(|&j| row[j] < -tol)
                .map(|j| (j, t.reduced[j].max(0.0) / -row[j]));
            let Some(q) = select_ratio(candidates, tol, bland, |j| (j, row[j].abs())) else {
                return SolverStatus::Infeasible;
            };
            let step = t.reduced[q].max(0.0) / -row[q];
            streak = if step <= tol { streak + 1 } else { 0 };
            t.pivot(r, q);
            self.iterations += 1;
        }
    }
}

fn argmin(items: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    items
        .fold(None, |best: Option<(usize, f64)>, i| {
            let k = key(i);
            match best {
                Some((_, bk)) if bk <= k => best,
                _ => Some((i, k)),
            }
        })
        .map(|(i, _)| i)
}

/// Minimum-ratio selection. Candidates within `tol` of the minimum are tied;
/// ties go to the smallest variable index under Bland's rule and to the
/// largest pivot magnitude otherwise. `info` maps a candidate to its
/// `(variable index, |pivot|)`.
fn select_ratio(
    candidates: impl Iterator<Item = (usize, f64)>,
    tol: f64,
    bland: bool,
    info: impl Fn(usize) -> (usize, f64),
) -> Option<usize> {
    let candidates: Vec<(usize, f64)> = candidates.collect();
    let min = candidates.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let tied = candidates
        .into_iter()
        .filter(|&(_, r)| r <= min + tol)
        .map(|(c, _)| c);
    if bland {
        tied.min_by_key(|&c| info(c).0)
    } else {
        tied.max_by(|&a, &b| info(a).1.total_cmp(&info(b).1))
    }
}
