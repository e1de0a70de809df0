use nalgebra::{DMatrix, DVector};

use crate::{Complex, Error, Result};

/// Relative size below which a diagonal entry of `R` counts as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares solution of `A x ≈ y` for a tall or square `A` via a thin
/// QR factorization.
pub(crate) fn least_squares(a: &DMatrix<Complex>, y: &DVector<Complex>) -> Result<DVector<Complex>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(DVector::zeros(0));
    }
    if rows < cols {
        return Err(Error::RankDeficient {
            rank: rows,
            columns: cols,
        });
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let largest = r.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rank = r
        .diagonal()
        .iter()
        .filter(|v| v.norm() > RANK_TOLERANCE * largest)
        .count();
    if largest == 0.0 || rank < cols {
        return Err(Error::RankDeficient { rank, columns: cols });
    }
    let rhs = qr.q().adjoint() * y;
    r.solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { rank, columns: cols })
}
