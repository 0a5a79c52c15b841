//! Quantile autoregression of order 1 to 3 over a grid of levels.

use serde::{Deserialize, Serialize};

use super::qreg::quantile_regression;
use super::QuantileGrid;
use crate::error::{Error, Result};
use crate::series::Series;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QarModel {
    pub order: usize,
    pub grid: QuantileGrid,
    /// Per level: intercept then lag coefficients.
    pub theta: Vec<Vec<f64>>,
    /// Normal-consistent scale from the median fit.
    pub sigma: f64,
    /// Row `t` (aligned with observation `first + t`), column per level,
    /// after monotone rearrangement across levels.
    pub fitted_quantiles: Vec<Vec<f64>>,
    pub first: usize,
}

impl QarModel {
    /// Fraction of observations strictly below the fitted `j`-th quantile.
    pub fn coverage(&self, y: &[f64], j: usize) -> f64 {
        let rows = &self.fitted_quantiles;
        let below = rows
            .iter()
            .enumerate()
            .filter(|(t, q)| y[self.first + t] < q[j])
            .count();
        below as f64 / rows.len() as f64
    }
}

pub(crate) fn lag_rows(y: &[f64], order: usize, first: usize) -> Vec<Vec<f64>> {
    (first..y.len())
        .map(|t| {
            let mut r = Vec::with_capacity(order + 1);
            r.push(1.0);
            r.extend((1..=order).map(|l| y[t - l]));
            r
        })
        .collect()
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("QAR order must be 1, 2 or 3, got {order}")));
    }
    Ok(())
}

pub fn fit_qar(y: &Series, order: usize, grid: &QuantileGrid) -> Result<QarModel> {
    check_order(order)?;
    let need = 10 * (order + 2);
    if y.len() < need {
        return Err(Error::TooShort {
            op: "fit_qar",
            need,
            got: y.len(),
        });
    }
    fit_qar_from(y.values(), order, order, grid.levels(), true)
        .map(|(theta, sigma, fitted)| QarModel {
            order,
            grid: grid.clone(),
            theta,
            sigma,
            fitted_quantiles: fitted,
            first: order,
        })
}

/// Fits each level on observations `first..` and returns coefficients, the
/// scale, and fitted quantiles (rearranged when `rearrange` and more than one level).
pub(crate) fn fit_qar_from(
    y: &[f64],
    order: usize,
    first: usize,
    levels: &[f64],
    rearrange: bool,
) -> Result<(Vec<Vec<f64>>, f64, Vec<Vec<f64>>)> {
    let x = lag_rows(y, order, first);
    let yy = &y[first..];
    let mut theta = Vec::with_capacity(levels.len());
    let mut cols = Vec::with_capacity(levels.len());
    for &tau in levels {
        let fit = quantile_regression(&x, yy, tau)?;
        cols.push(yy.iter().zip(&fit.residuals).map(|(a, r)| a - r).collect::<Vec<f64>>());
        theta.push(fit.beta);
    }
    let med = quantile_regression(&x, yy, 0.5)?;
    let sigma = med.residuals.iter().map(|r| r.abs()).sum::<f64>() / yy.len() as f64
        * (std::f64::consts::PI / 2.0).sqrt();
    let mut fitted: Vec<Vec<f64>> = (0..yy.len()).map(|t| cols.iter().map(|c| c[t]).collect()).collect();
    if rearrange && levels.len() > 1 {
        for row in &mut fitted {
            row.sort_by(|a, b| a.total_cmp(b));
        }
    }
    Ok((theta, sigma, fitted))
}
