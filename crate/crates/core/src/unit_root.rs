//! Unit-root diagnostics: augmented Dickey-Fuller, Phillips-Perron (Z_t) and
//! the innovational-outlier break test with a shift in both intercept and
//! trend at an unknown date.
//!
//! ADF/PP decisions use MacKinnon (2010) response-surface critical values and
//! MacKinnon (1994) approximate p-values. The break test has no closed-form
//! p-value; its critical values are tabulated by sample size and linearly
//! interpolated.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::series::{Period, Series};
use crate::stats::{bartlett_lrv, normal_cdf};

pub const LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deterministic {
    Constant,
    ConstantTrend,
}

impl Deterministic {
    pub fn label(self) -> &'static str {
        match self {
            Deterministic::Constant => "C",
            Deterministic::ConstantTrend => "C+T",
        }
    }

    fn columns(self) -> usize {
        match self {
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoCriterion {
    Aic,
    Sic,
}

impl InfoCriterion {
    /// `ln(SSR/n) + penalty * k / n`.
    pub fn value(self, ssr: f64, n: usize, k: usize) -> f64 {
        let nf = n as f64;
        let pen = match self {
            InfoCriterion::Aic => 2.0,
            InfoCriterion::Sic => nf.ln(),
        };
        (ssr / nf).ln() + pen * k as f64 / nf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    NeweyWestAuto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitRootKind {
    Adf,
    PhillipsPerron,
    PerronBreak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub kind: UnitRootKind,
    pub statistic: f64,
    pub lag_or_bandwidth: usize,
    pub deterministic: Deterministic,
    pub p_value: Option<f64>,
    /// Critical values at 1%, 5% and 10%.
    pub critical_values: [f64; 3],
    pub reject_at: Vec<f64>,
    pub break_date: Option<Period>,
    pub nobs: usize,
}

impl UnitRootResult {
    fn new(
        kind: UnitRootKind,
        statistic: f64,
        lag_or_bandwidth: usize,
        deterministic: Deterministic,
        p_value: Option<f64>,
        critical_values: [f64; 3],
        break_date: Option<Period>,
        nobs: usize,
    ) -> Self {
        let reject_at = LEVELS
            .iter()
            .zip(critical_values)
            .filter(|(_, cv)| statistic < *cv)
            .map(|(l, _)| *l)
            .collect();
        Self {
            kind,
            statistic,
            lag_or_bandwidth,
            deterministic,
            p_value,
            critical_values,
            reject_at,
            break_date,
            nobs,
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.reject_at.iter().any(|l| (*l - level).abs() < 1e-12)
    }

    /// `***`, `**`, `*` for rejection at 1%, 5%, 10%.
    pub fn stars(&self) -> &'static str {
        if self.rejects(0.01) {
            "***"
        } else if self.rejects(0.05) {
            "**"
        } else if self.rejects(0.10) {
            "*"
        } else {
            ""
        }
    }
}

// MacKinnon (2010), one variable: rows 1%, 5%, 10%; cv = b0 + b1/T + b2/T^2 + b3/T^3.
const TAU_C_2010: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const TAU_CT_2010: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

pub fn mackinnon_critical_values(det: Deterministic, nobs: usize) -> [f64; 3] {
    let table = match det {
        Deterministic::Constant => &TAU_C_2010,
        Deterministic::ConstantTrend => &TAU_CT_2010,
    };
    let t = nobs as f64;
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(table) {
        *o = row[0] + row[1] / t + row[2] / (t * t) + row[3] / (t * t * t);
    }
    out
}

/// MacKinnon (1994) approximate asymptotic p-value for the tau statistic.
pub fn mackinnon_p_value(stat: f64, det: Deterministic) -> f64 {
    // (max, min, star, small-p coefficients, large-p coefficients), ascending powers
    let (max, min, star, small, large): (f64, f64, f64, [f64; 3], [f64; 4]) = match det {
        Deterministic::Constant => (
            2.74,
            -18.83,
            -1.61,
            [2.1659, 1.4412, 0.038269],
            [1.7339, 0.93202, -0.12745, -0.010368],
        ),
        Deterministic::ConstantTrend => (
            0.7,
            -16.18,
            -2.89,
            [3.2512, 1.6047, 0.049588],
            [2.5261, 0.61654, -0.37956, -0.060285],
        ),
    };
    if stat > max {
        return 1.0;
    }
    if stat < min {
        return 0.0;
    }
    let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &b| acc * stat + b);
    if stat <= star {
        normal_cdf(poly(&small))
    } else {
        normal_cdf(poly(&large))
    }
}

fn push_deterministic(row: &mut Vec<f64>, det: Deterministic, t: usize) {
    row.push(1.0);
    if det == Deterministic::ConstantTrend {
        row.push(t as f64);
    }
}

/// ADF regression rows for observations `first..y.len()` with `lags` lagged
/// differences. Column order: y_{t-1}, deterministics, lagged differences.
fn adf_design(y: &[f64], det: Deterministic, lags: usize, first: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = y.len() - first;
    let k = 1 + det.columns() + lags;
    let mut x = DMatrix::zeros(n, k);
    let mut dy = Vec::with_capacity(n);
    for (r, t) in (first..y.len()).enumerate() {
        let mut row = Vec::with_capacity(k);
        row.push(y[t - 1]);
        push_deterministic(&mut row, det, t);
        for i in 1..=lags {
            row.push(y[t - i] - y[t - i - 1]);
        }
        for (c, v) in row.into_iter().enumerate() {
            x[(r, c)] = v;
        }
        dy.push(y[t] - y[t - 1]);
    }
    (x, dy)
}

/// Information criterion for each lag `0..=max_lag`, all evaluated on the
/// common sample that starts at observation `max_lag + 1`.
pub fn adf_lag_criteria(
    y: &[f64],
    det: Deterministic,
    max_lag: usize,
    criterion: InfoCriterion,
) -> Result<Vec<f64>> {
    if y.len() < max_lag + 10 {
        return Err(Error::TooShort {
            op: "adf_test",
            need: max_lag + 10,
            got: y.len(),
        });
    }
    (0..=max_lag)
        .map(|p| {
            let (x, dy) = adf_design(y, det, p, max_lag + 1);
            let fit = ols(&x, &dy, "ADF lag selection")?;
            Ok(criterion.value(fit.ssr, dy.len(), x.ncols()))
        })
        .collect()
}

/// Index of the smallest value; ties go to the earliest index.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn adf_test(
    s: &Series,
    det: Deterministic,
    max_lag: usize,
    criterion: InfoCriterion,
) -> Result<UnitRootResult> {
    let y = s.values();
    let ics = adf_lag_criteria(y, det, max_lag, criterion)?;
    let lag = argmin_first(&ics);
    adf_at_lag(y, det, lag)
}

/// ADF regression at a fixed lag on the largest available sample.
pub fn adf_at_lag(y: &[f64], det: Deterministic, lag: usize) -> Result<UnitRootResult> {
    if y.len() < lag + 10 {
        return Err(Error::TooShort {
            op: "adf_test",
            need: lag + 10,
            got: y.len(),
        });
    }
    let (x, dy) = adf_design(y, det, lag, lag + 1);
    let fit = ols(&x, &dy, "ADF regression")?;
    let stat = fit.t_stat(0);
    let nobs = dy.len();
    Ok(UnitRootResult::new(
        UnitRootKind::Adf,
        stat,
        lag,
        det,
        Some(mackinnon_p_value(stat, det)),
        mackinnon_critical_values(det, nobs),
        None,
        nobs,
    ))
}

pub fn newey_west_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

pub fn pp_test(s: &Series, det: Deterministic, bandwidth: Bandwidth) -> Result<UnitRootResult> {
    let y = s.values();
    if y.len() < 20 {
        return Err(Error::TooShort {
            op: "pp_test",
            need: 20,
            got: y.len(),
        });
    }
    // Delta y_t on y_{t-1} and deterministics; same tau as the level regression.
    let (x, dy) = adf_design(y, det, 0, 1);
    let fit = ols(&x, &dy, "PP regression")?;
    let n = dy.len();
    let lags = match bandwidth {
        Bandwidth::NeweyWestAuto => newey_west_bandwidth(n),
        Bandwidth::Fixed(l) => l,
    };
    let gamma0 = fit.ssr / n as f64;
    let lrv = bartlett_lrv(&fit.residuals, lags);
    let se = fit.std_error(0);
    let s_reg = fit.sigma2().sqrt();
    let t_rho = fit.t_stat(0);
    let z_t = (gamma0 / lrv).sqrt() * t_rho - 0.5 * (lrv - gamma0) / lrv.sqrt() * (n as f64 * se / s_reg);
    Ok(UnitRootResult::new(
        UnitRootKind::PhillipsPerron,
        z_t,
        lags,
        det,
        Some(mackinnon_p_value(z_t, det)),
        mackinnon_critical_values(det, n),
        None,
        n,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronConfig {
    /// Largest lagged difference considered by general-to-specific selection.
    pub max_lag: usize,
    /// Fraction trimmed from each end of the break-date search.
    pub trim: f64,
    /// Two-sided normal critical value for keeping the last lag.
    pub lag_t_crit: f64,
}

impl Default for PerronConfig {
    fn default() -> Self {
        Self {
            max_lag: 8,
            trim: 0.15,
            lag_t_crit: 1.645,
        }
    }
}

// Null quantiles (1%, 5%, 10%) of the minimum t-statistic for the
// intercept-and-slope innovational-outlier model with general-to-specific
// lag selection (max 8 lags, 10% two-sided), by sample size.
const PERRON_CV: [(f64, [f64; 3]); 4] = [
    (100.0, [-6.009, -5.488, -5.200]),
    (200.0, [-5.855, -5.328, -5.032]),
    (400.0, [-5.679, -5.193, -4.912]),
    (800.0, [-5.613, -5.151, -4.842]),
];

pub fn perron_critical_values(nobs: usize) -> [f64; 3] {
    let t = nobs as f64;
    if t <= PERRON_CV[0].0 {
        return PERRON_CV[0].1;
    }
    for w in PERRON_CV.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if t <= t1 {
            let f = (t - t0) / (t1 - t0);
            let mut out = [0.0; 3];
            for i in 0..3 {
                out[i] = c0[i] + f * (c1[i] - c0[i]);
            }
            return out;
        }
    }
    PERRON_CV[PERRON_CV.len() - 1].1
}

/// Regression rows for break index `tb` (last pre-break observation), on
/// observations `first..T`. Columns: y_{t-1}, 1, t, DU, DT, D(Tb), lagged differences.
fn perron_design(y: &[f64], tb: usize, lags: usize, first: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = y.len() - first;
    let k = 6 + lags;
    let mut x = DMatrix::zeros(n, k);
    let mut yt = Vec::with_capacity(n);
    for (r, t) in (first..y.len()).enumerate() {
        x[(r, 0)] = y[t - 1];
        x[(r, 1)] = 1.0;
        x[(r, 2)] = t as f64;
        if t > tb {
            x[(r, 3)] = 1.0;
            x[(r, 4)] = (t - tb) as f64;
        }
        if t == tb + 1 {
            x[(r, 5)] = 1.0;
        }
        for i in 1..=lags {
            x[(r, 5 + i)] = y[t - i] - y[t - i - 1];
        }
        yt.push(y[t]);
    }
    (x, yt)
}

/// Statistic `(alpha - 1)/se(alpha)` at break `tb` and the selected lag.
fn perron_at_break(y: &[f64], tb: usize, cfg: &PerronConfig) -> Result<(f64, usize)> {
    let first = cfg.max_lag + 1;
    let mut lag = cfg.max_lag;
    loop {
        let (x, yt) = perron_design(y, tb, lag, first);
        let fit = ols(&x, &yt, "Perron break regression")?;
        if lag == 0 || fit.t_stat(5 + lag).abs() > cfg.lag_t_crit {
            let t_alpha = (fit.beta[0] - 1.0) / fit.std_error(0);
            return Ok((t_alpha, lag));
        }
        lag -= 1;
    }
}

pub fn perron_break_test(s: &Series) -> Result<UnitRootResult> {
    perron_break_test_with(s, &PerronConfig::default())
}

pub fn perron_break_test_with(s: &Series, cfg: &PerronConfig) -> Result<UnitRootResult> {
    let y = s.values();
    let n = y.len();
    if n < 50 {
        return Err(Error::TooShort {
            op: "perron_break_test",
            need: 50,
            got: n,
        });
    }
    let lo = ((cfg.trim * n as f64).ceil() as usize).max(cfg.max_lag + 2);
    let hi = ((1.0 - cfg.trim) * n as f64).floor() as usize;
    let mut best: Option<(f64, usize, usize)> = None;
    for tb in lo..=hi.min(n - 3) {
        let (stat, lag) = perron_at_break(y, tb, cfg)?;
        if best.is_none_or(|(b, _, _)| stat < b) {
            best = Some((stat, lag, tb));
        }
    }
    let (stat, lag, tb) = best.ok_or(Error::TooShort {
        op: "perron_break_test",
        need: 50,
        got: n,
    })?;
    let nobs = n - cfg.max_lag - 1;
    Ok(UnitRootResult::new(
        UnitRootKind::PerronBreak,
        stat,
        lag,
        Deterministic::ConstantTrend,
        None,
        perron_critical_values(nobs),
        Some(s.period(tb)),
        nobs,
    ))
}
