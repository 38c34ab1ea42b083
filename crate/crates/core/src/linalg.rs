//! Small dense helpers shared by the estimators and solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative ridge added to a symmetric block that fails Cholesky: `1e-10 * trace / n`.
pub const RIDGE_FACTOR: f64 = 1e-10;

/// Cholesky factor of a symmetric positive definite matrix, retrying once with
/// a ridge of `RIDGE_FACTOR * trace / n` on the diagonal. The flag reports
/// whether the ridge was needed.
pub fn cholesky_with_ridge(m: &DMatrix<f64>, what: &str) -> Result<(Cholesky<f64, Dyn>, bool)> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Estimation(format!("{what}: non-finite entries")));
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok((ch, false));
    }
    let n = m.nrows().max(1);
    let eps = RIDGE_FACTOR * (m.trace().abs() / n as f64).max(f64::MIN_POSITIVE);
    let mut ridged = m.clone();
    for i in 0..m.nrows() {
        ridged[(i, i)] += eps;
    }
    Cholesky::new(ridged)
        .map(|ch| (ch, true))
        .ok_or_else(|| Error::Estimation(format!("{what}: matrix is not positive definite")))
}

/// Inverse of an SPD matrix (with the ridge fallback).
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, bool)> {
    let (ch, ridged) = cholesky_with_ridge(m, what)?;
    let mut inv = ch.inverse();
    symmetrize(&mut inv);
    Ok((inv, ridged))
}

/// `ln det` of an SPD matrix from its Cholesky factor.
pub fn chol_log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| ((i + 1)..n).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

/// Principal sub-matrix on `idx`.
pub fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Sample mean and maximum-likelihood covariance (divisor = row count) of the
/// selected rows of a T×n data matrix.
pub fn mean_and_covariance(data: &DMatrix<f64>, rows: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.ncols();
    let m = rows.len().max(1) as f64;
    let mut mean = DVector::zeros(n);
    for &t in rows {
        for j in 0..n {
            mean[j] += data[(t, j)];
        }
    }
    mean /= m;
    let mut cov = DMatrix::zeros(n, n);
    let mut dev = vec![0.0; n];
    for &t in rows {
        for j in 0..n {
            dev[j] = data[(t, j)] - mean[j];
        }
        for a in 0..n {
            let da = dev[a];
            for b in a..n {
                cov[(a, b)] += da * dev[b];
            }
        }
    }
    for a in 0..n {
        for b in a..n {
            let v = cov[(a, b)] / m;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Squared Pearson correlations derived from a covariance matrix. Zero-variance
/// coordinates get zero similarity to everything else.
pub fn squared_correlation(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if sd[i] > 0.0 && sd[j] > 0.0 {
            let r = cov[(i, j)] / (sd[i] * sd[j]);
            r * r
        } else {
            0.0
        }
    })
}

pub fn row_vector(data: &DMatrix<f64>, t: usize) -> DVector<f64> {
    data.row(t).transpose()
}

/// `min_eig > 0` check via Cholesky without ridge.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    Cholesky::new(m.clone()).is_some()
}
