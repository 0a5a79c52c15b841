//! Vector autoregression by equation-wise least squares and the Wald test
//! for linear Granger non-causality.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ols, OlsFit};
use crate::series::Series;
use crate::stats::chi2_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarCriterion {
    Aic,
    Bic,
}

#[derive(Debug, Clone)]
pub struct VarModel {
    pub variables: Vec<String>,
    pub lag: usize,
    /// Row `i` holds equation `i`: intercept, then lag 1 of every variable,
    /// then lag 2, and so on.
    pub coefficients: Vec<Vec<f64>>,
    pub residuals: Vec<Series>,
    /// Residual covariance with `1/n` scaling.
    pub sigma: Vec<Vec<f64>>,
    pub aic: f64,
    pub bic: f64,
    fits: Vec<OlsFit>,
}

impl VarModel {
    pub fn nobs(&self) -> usize {
        self.fits[0].nobs
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Column of `(variable, lag)` in the regressor layout.
    pub fn column(&self, variable: usize, lag: usize) -> usize {
        1 + (lag - 1) * self.variables.len() + variable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerTestResult {
    pub cause: String,
    pub effect: String,
    pub lag: usize,
    pub chi_sq: f64,
    pub p_value: f64,
    pub decision: bool,
}

fn check_system(system: &[Series]) -> Result<usize> {
    let first = system
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty VAR system".into()))?;
    for s in &system[1..] {
        if s.len() != first.len() {
            return Err(Error::LengthMismatch {
                left: first.len(),
                right: s.len(),
            });
        }
        if s.start() != first.start() {
            return Err(Error::TimestampMismatch {
                left: format!("{}..{}", first.start(), first.end()),
                right: format!("{}..{}", s.start(), s.end()),
            });
        }
    }
    Ok(first.len())
}

fn var_design(system: &[Series], p: usize, first: usize) -> DMatrix<f64> {
    let k = system.len();
    let t_len = system[0].len();
    let n = t_len - first;
    let mut x = DMatrix::zeros(n, 1 + k * p);
    for (r, t) in (first..t_len).enumerate() {
        x[(r, 0)] = 1.0;
        for l in 1..=p {
            for (j, s) in system.iter().enumerate() {
                x[(r, 1 + (l - 1) * k + j)] = s.values()[t - l];
            }
        }
    }
    x
}

fn log_det(sigma: &[Vec<f64>]) -> Result<f64> {
    let k = sigma.len();
    let m = DMatrix::from_fn(k, k, |i, j| sigma[i][j]);
    let chol = nalgebra::Cholesky::new(m).ok_or_else(|| Error::SingularRegression {
        context: "VAR residual covariance".into(),
    })?;
    Ok(2.0 * (0..k).map(|i| chol.l()[(i, i)].ln()).sum::<f64>())
}

fn fit_from(system: &[Series], p: usize, first: usize) -> Result<VarModel> {
    let t_len = check_system(system)?;
    let k = system.len();
    if p == 0 {
        return Err(Error::InvalidArgument("VAR lag must be at least 1".into()));
    }
    let need = first + k * p + 2;
    if t_len < need {
        return Err(Error::TooShort {
            op: "fit_var",
            need,
            got: t_len,
        });
    }
    let x = var_design(system, p, first);
    let n = t_len - first;
    let mut fits = Vec::with_capacity(k);
    for s in system {
        fits.push(ols(&x, &s.values()[first..], "VAR equation")?);
    }
    let mut sigma = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            sigma[a][b] = fits[a]
                .residuals
                .iter()
                .zip(&fits[b].residuals)
                .map(|(u, v)| u * v)
                .sum::<f64>()
                / n as f64;
        }
    }
    let ld = log_det(&sigma)?;
    let params = (k * (k * p + 1)) as f64;
    let nf = n as f64;
    let residuals = system
        .iter()
        .zip(&fits)
        .map(|(s, f)| Series::new(format!("{}_resid", s.name()), s.period(first), f.residuals.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(VarModel {
        variables: system.iter().map(|s| s.name().to_string()).collect(),
        lag: p,
        coefficients: fits.iter().map(|f| f.beta.clone()).collect(),
        residuals,
        sigma,
        aic: ld + 2.0 * params / nf,
        bic: ld + nf.ln() * params / nf,
        fits,
    })
}

pub fn fit_var(system: &[Series], p: usize) -> Result<VarModel> {
    fit_from(system, p, p)
}

/// Lag minimizing the criterion over `1..=max_p`, every candidate estimated
/// on the common sample that starts at observation `max_p`.
pub fn select_lag(system: &[Series], max_p: usize, criterion: VarCriterion) -> Result<usize> {
    if max_p == 0 {
        return Err(Error::InvalidArgument("max_p must be at least 1".into()));
    }
    let mut best = (f64::INFINITY, 1);
    for p in 1..=max_p {
        let m = fit_from(system, p, max_p)?;
        let ic = match criterion {
            VarCriterion::Aic => m.aic,
            VarCriterion::Bic => m.bic,
        };
        if ic < best.0 {
            best = (ic, p);
        }
    }
    Ok(best.1)
}

/// Wald test that every lag of `cause` has a zero coefficient in the
/// `effect` equation, against chi-square with `p` degrees of freedom.
pub fn granger_wald(model: &VarModel, cause: &str, effect: &str) -> Result<GrangerTestResult> {
    let c = model.index_of(cause)?;
    let e = model.index_of(effect)?;
    let fit = &model.fits[e];
    let p = model.lag;
    let cols: Vec<usize> = (1..=p).map(|l| model.column(c, l)).collect();
    let b = DVector::from_iterator(p, cols.iter().map(|&j| fit.beta[j]));
    let s2 = fit.sigma2();
    let v = DMatrix::from_fn(p, p, |i, j| s2 * fit.xtx_inv[(cols[i], cols[j])]);
    let chol = nalgebra::Cholesky::new(v).ok_or_else(|| Error::SingularRegression {
        context: "Granger restriction covariance".into(),
    })?;
    let chi_sq = b.dot(&chol.solve(&b)).max(0.0);
    let p_value = chi2_sf(chi_sq, p as f64);
    Ok(GrangerTestResult {
        cause: cause.to_string(),
        effect: effect.to_string(),
        lag: p,
        chi_sq,
        p_value,
        decision: p_value <= 0.10,
    })
}
