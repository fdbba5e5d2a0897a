//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::algebra::{C64, ONE, ZERO};

pub(crate) type CMatrix = DMatrix<C64>;

#[cfg(test)]
pub(crate) fn from_rows(rows: &[Vec<C64>]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Determinant as `(ln|det|, det/|det|)` so that large or tiny values do not
/// overflow. A singular matrix yields `(-inf, 0)`.
pub(crate) fn log_det(m: &CMatrix) -> (f64, C64) {
    let n = m.nrows();
    if n == 0 {
        return (0.0, ONE);
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut phase: C64 = lu.p().determinant();
    for i in 0..n {
        let d = u[(i, i)];
        let r = d.norm();
        if r == 0.0 || !r.is_finite() {
            return (f64::NEG_INFINITY, ZERO);
        }
        log_abs += r.ln();
        phase *= d / r;
    }
    (log_abs, phase)
}

pub(crate) fn det_from_log(log_abs: f64, phase: C64) -> C64 {
    if log_abs == f64::NEG_INFINITY {
        ZERO
    } else {
        phase * log_abs.exp()
    }
}

pub(crate) fn solve(m: &CMatrix, rhs: &[C64]) -> Option<Vec<C64>> {
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = m.clone().lu().solve(&b)?;
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number; infinite when the matrix is singular.
pub(crate) fn condition_1(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    match m.clone().lu().try_inverse() {
        Some(inv) => (norm1(m) * norm1(&inv)).max(1.0),
        None => f64::INFINITY,
    }
}

pub(crate) fn eigenvalues(m: CMatrix) -> Option<Vec<C64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    let ev = nalgebra::Schur::new(m).eigenvalues()?;
    Some(ev.iter().copied().collect())
}

/// Roots of `sum coeffs[k] x^k` via the eigenvalues of the companion matrix.
pub(crate) fn poly_roots(coeffs: &[C64]) -> Option<Vec<C64>> {
    let n = coeffs.len().checked_sub(1)?;
    let lead = coeffs[n];
    if lead == ZERO {
        return None;
    }
    let mut comp = CMatrix::zeros(n, n);
    for i in 0..n {
        comp[(0, i)] = -coeffs[n - 1 - i] / lead;
        if i + 1 < n {
            comp[(i + 1, i)] = ONE;
        }
    }
    eigenvalues(comp)
}
