//! Least squares and small dense solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    /// `(X'X)^{-1}` in the original (unscaled) coordinates.
    pub xtx_inv: DMatrix<f64>,
    pub nobs: usize,
}

impl OlsFit {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    /// Residual variance with degrees-of-freedom correction.
    pub fn sigma2(&self) -> f64 {
        self.ssr / (self.nobs - self.k()) as f64
    }

    pub fn std_error(&self, j: usize) -> f64 {
        (self.sigma2() * self.xtx_inv[(j, j)]).sqrt()
    }

    pub fn t_stat(&self, j: usize) -> f64 {
        self.beta[j] / self.std_error(j)
    }
}

/// Builds an `n x k` design from row vectors.
pub fn design(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, k, |i, j| rows[i][j])
}

/// Ordinary least squares through a column-equilibrated Cholesky factor of
/// `X'X`. Rank deficiency (relative pivot below 1e-10) is reported as
/// [`Error::SingularRegression`].
pub fn ols(x: &DMatrix<f64>, y: &[f64], context: &str) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n <= k {
        return Err(Error::TooShort {
            op: "ols",
            need: k + 1,
            got: n,
        });
    }
    let singular = || Error::SingularRegression {
        context: context.to_string(),
    };
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let s = x.column(j).norm();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    if scale.iter().any(|&s| s == 0.0) {
        return Err(singular());
    }
    let xs = DMatrix::from_fn(n, k, |i, j| x[(i, j)] * scale[j]);
    let yv = DVector::from_column_slice(y);
    let xtx = xs.transpose() * &xs;
    let chol = nalgebra::Cholesky::new(xtx).ok_or_else(singular)?;
    let l = chol.l();
    let diag_min = (0..k).map(|j| l[(j, j)]).fold(f64::INFINITY, f64::min);
    if diag_min * diag_min < 1e-10 {
        return Err(singular());
    }
    let xty = xs.transpose() * &yv;
    let bs = chol.solve(&xty);
    let inv_s = chol.inverse();
    let beta: Vec<f64> = (0..k).map(|j| bs[j] * scale[j]).collect();
    let xtx_inv = DMatrix::from_fn(k, k, |i, j| inv_s[(i, j)] * scale[i] * scale[j]);
    let fitted = x * DVector::from_column_slice(&beta);
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let ssr = residuals.iter().map(|r| r * r).sum();
    Ok(OlsFit {
        beta,
        residuals,
        ssr,
        xtx_inv,
        nobs: n,
    })
}

/// Inverts a small row-major `p x p` matrix with partial pivoting.
/// Returns `None` when a pivot falls below `tol` times the largest entry.
pub fn invert_small(a: &[f64], p: usize, tol: f64) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; p * p];
    for i in 0..p {
        inv[i * p + i] = 1.0;
    }
    let amax = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if amax == 0.0 {
        return None;
    }
    for col in 0..p {
        let (piv, pval) = (col..p)
            .map(|r| (r, m[r * p + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= tol * amax {
            return None;
        }
        if piv != col {
            for j in 0..p {
                m.swap(col * p + j, piv * p + j);
                inv.swap(col * p + j, piv * p + j);
            }
        }
        let d = m[col * p + col];
        for j in 0..p {
            m[col * p + j] /= d;
            inv[col * p + j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = m[r * p + col];
                if f != 0.0 {
                    for j in 0..p {
                        m[r * p + j] -= f * m[col * p + j];
                        inv[r * p + j] -= f * inv[col * p + j];
                    }
                }
            }
        }
    }
    Some(inv)
}
