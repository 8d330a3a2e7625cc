//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Outcome of a Cholesky factorization that may have needed a ridge.
pub struct SpdFactor {
    pub chol: Cholesky<f64, Dyn>,
    pub ridged: bool,
}

/// Factorizes a symmetric matrix, adding `1e-10 · tr(A)/d` to the diagonal
/// if the plain factorization fails.
pub fn spd_factor(a: &DMatrix<f64>) -> Result<SpdFactor> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(SpdFactor {
            chol,
            ridged: false,
        });
    }
    let d = a.nrows().max(1) as f64;
    let ridge = 1e-10 * (a.trace().abs() / d).max(f64::MIN_POSITIVE);
    let mut b = a.clone();
    for i in 0..a.nrows() {
        b[(i, i)] += ridge;
    }
    Cholesky::new(b)
        .map(|chol| SpdFactor { chol, ridged: true })
        .ok_or_else(|| Error::Numerical("matrix is not positive definite even after ridge".into()))
}

pub fn spd_inverse(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let f = spd_factor(a)?;
    Ok((f.chol.inverse(), f.ridged))
}

/// Quadratic form `vᵀ A v`.
pub fn quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * a * v)[(0, 0)]
}

/// Symmetrizes in place, `(A + Aᵀ)/2`.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

/// Sample mean and (M−1)-normalized covariance of the rows of `draws`.
pub fn row_mean_cov(draws: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = draws.nrows();
    let d = draws.ncols();
    let mean = DVector::from_fn(d, |j, _| draws.column(j).mean());
    let mut cov = DMatrix::zeros(d, d);
    for r in 0..m {
        let dev = draws.row(r).transpose() - &mean;
        cov += &dev * dev.transpose();
    }
    cov /= (m.max(2) - 1) as f64;
    (mean, cov)
}
