//! Shared dense kernels.
//!
//! The plain-loop `vdot`/`vnorm` are used by every iterate-update rule so the
//! single-process distributed simulation can reproduce the sequential solver
//! bit for bit by summing the same terms in the same order.

use nalgebra::{DMatrix, DVector};

/// Dot product as a plain ascending-index loop.
pub fn vdot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Euclidean norm built on [`vdot`].
pub fn vnorm(a: &DVector<f64>) -> f64 {
    vdot(a, a).sqrt()
}

/// Entrywise max-abs norm of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Numerical rank with a relative singular-value threshold.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svals = m.clone().singular_values();
    let smax = svals.max();
    if smax <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > rtol * smax).count()
}

/// Orthonormal basis of the column span of `m`, via SVD with a relative
/// threshold. Returns an `nrows x rank` matrix (zero columns when the span is
/// trivial).
pub fn orthonormal_col_basis(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let nrows = m.nrows();
    if nrows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(nrows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return DMatrix::zeros(nrows, 0);
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rtol * smax)
        .count();
    u.columns(0, rank).into_owned()
}

/// Minimum-norm least-squares solve `m⁺ rhs` via SVD with a relative
/// singular-value cutoff.
pub fn pinv_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, rtol: f64) -> DVector<f64> {
    let d = m.ncols();
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let smax = svd.singular_values.max();
    let mut x = DVector::zeros(d);
    if smax <= 0.0 {
        return x;
    }
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > rtol * smax {
            let coeff = u.column(i).dot(rhs) / s;
            x += v_t.row(i).transpose() * coeff;
        }
    }
    x
}

/// Largest singular value (0 for an empty matrix).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}
