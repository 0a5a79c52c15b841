//! Nonparametric Granger causality: the Hiemstra-Jones modification of the
//! Baek-Brock test and the Diks-Panchenko corrected statistic.
//!
//! Both tests embed `lx = ly = lag` past values of cause and effect plus one
//! lead of the effect, compare vectors in the sup norm with a common bandwidth
//! on standardized data and report one-sided upper-tail normal p-values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::{bartlett_lrcov, bartlett_lrv, mean, normal_sf, standardize};

pub const DEFAULT_BANDWIDTH: f64 = 1.5;
const GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonparamKind {
    HJ,
    DP,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonparamCausalityResult {
    pub lag: usize,
    pub bandwidth: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub kind: NonparamKind,
}

/// Diks-Panchenko rate-optimal bandwidth `min(1.5, 8 n^{-2/7})`.
pub fn dp_auto_bandwidth(n: usize) -> f64 {
    (8.0 * (n as f64).powf(-2.0 / 7.0)).min(1.5)
}

/// Pairwise closeness of the embedded vectors, `i != j`, row-major `n x n`.
/// `xl`: lagged cause, `yl`: lagged effect, `z`: lead effect.
pub struct Closeness {
    pub n: usize,
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub z: Vec<bool>,
}

impl Closeness {
    pub fn build(x: &[f64], y: &[f64], lag: usize, eps: f64) -> Self {
        let t_len = x.len();
        let n = t_len - lag;
        let mut cx = vec![false; n * n];
        let mut cy = vec![false; n * n];
        let mut cz = vec![false; n * n];
        let close_hist = |v: &[f64], a: usize, b: usize| (1..=lag).all(|l| (v[a - l] - v[b - l]).abs() < eps);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (i + lag, j + lag);
                let fx = close_hist(x, a, b);
                let fy = close_hist(y, a, b);
                let fz = (y[a] - y[b]).abs() < eps;
                for (store, v) in [(&mut cx, fx), (&mut cy, fy), (&mut cz, fz)] {
                    store[i * n + j] = v;
                    store[j * n + i] = v;
                }
            }
        }
        Self { n, x: cx, y: cy, z: cz }
    }

    fn at(&self, i: usize, j: usize) -> (bool, bool, bool) {
        let k = i * self.n + j;
        (self.x[k], self.y[k], self.z[k])
    }
}

fn prepare(x: &Series, y: &Series, lag: usize, op: &'static str) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if lag == 0 {
        return Err(Error::InvalidArgument(format!("{op}: lag must be at least 1")));
    }
    if x.len() < 50 + lag {
        return Err(Error::TooShort {
            op,
            need: 50 + lag,
            got: x.len(),
        });
    }
    Ok((standardize(x.values()), standardize(y.values())))
}

/// Per-observation first-order projections `(h1, h2, h3, h4)` of the four
/// Hiemstra-Jones integrals and their sample values `(C1, C2, C3, C4)`.
///
/// C1: lead and lagged effect with lagged cause; C2: lagged effect with lagged
/// cause; C3: lead with lagged effect; C4: lagged effect.
pub fn hj_integrals(c: &Closeness) -> (Vec<[f64; 4]>, [f64; 4]) {
    let n = c.n;
    let mut h = vec![[0.0; 4]; n];
    for (i, hi) in h.iter_mut().enumerate() {
        let mut cnt = [0usize; 4];
        for j in 0..n {
            if i == j {
                continue;
            }
            let (fx, fy, fz) = c.at(i, j);
            if fy {
                cnt[3] += 1;
                if fz {
                    cnt[2] += 1;
                }
                if fx {
                    cnt[1] += 1;
                    if fz {
                        cnt[0] += 1;
                    }
                }
            }
        }
        for k in 0..4 {
            hi[k] = cnt[k] as f64 / (n - 1) as f64;
        }
    }
    let mut cs = [0.0; 4];
    for k in 0..4 {
        cs[k] = h.iter().map(|v| v[k]).sum::<f64>() / n as f64;
    }
    (h, cs)
}

pub fn lrv_lags(n: usize) -> usize {
    (n as f64).powf(0.25).floor() as usize
}

pub fn hj_test(x: &Series, y: &Series, lag: usize, eps: f64) -> Result<NonparamCausalityResult> {
    let (xs, ys) = prepare(x, y, lag, "hj_test")?;
    let c = Closeness::build(&xs, &ys, lag, eps);
    let n = c.n;
    let (h, cs) = hj_integrals(&c);
    for &v in &[cs[1], cs[3]] {
        if v < GUARD {
            return Err(Error::DegenerateDistances { value: v });
        }
    }
    let [c1, c2, c3, c4] = cs;
    let diff = c1 / c2 - c3 / c4;
    let d = [1.0 / c2, -c1 / (c2 * c2), -1.0 / c4, c3 / (c4 * c4)];
    let rows: Vec<Vec<f64>> = h.iter().map(|v| v.to_vec()).collect();
    let sigma = bartlett_lrcov(&rows, lrv_lags(n));
    let mut var = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            var += 4.0 * d[a] * sigma[a][b] * d[b];
        }
    }
    if !(var > GUARD) {
        return Err(Error::DegenerateDistances { value: var });
    }
    let statistic = (n as f64).sqrt() * diff / var.sqrt();
    Ok(NonparamCausalityResult {
        lag,
        bandwidth: eps,
        statistic,
        p_value: normal_sf(statistic),
        kind: NonparamKind::HJ,
    })
}

/// Local density counts `(Cxyz, Cy, Cxy, Cyz)` for each observation, each
/// normalized by `n - 1`.
pub fn dp_local_counts(c: &Closeness) -> Vec<[f64; 4]> {
    let n = c.n;
    (0..n)
        .map(|i| {
            let mut cnt = [0usize; 4];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (fx, fy, fz) = c.at(i, j);
                if fy {
                    cnt[1] += 1;
                    if fx {
                        cnt[2] += 1;
                    }
                    if fz {
                        cnt[3] += 1;
                    }
                    if fx && fz {
                        cnt[0] += 1;
                    }
                }
            }
            let d = (n - 1) as f64;
            [cnt[0] as f64 / d, cnt[1] as f64 / d, cnt[2] as f64 / d, cnt[3] as f64 / d]
        })
        .collect()
}

/// `T_n` and the projection sequence used for its variance.
pub fn dp_statistic_parts(c: &Closeness) -> (f64, Vec<f64>) {
    let n = c.n;
    let f = dp_local_counts(c);
    let nf = n as f64;
    let sum: f64 = f.iter().map(|v| v[0] * v[1] - v[2] * v[3]).sum();
    let t_n = sum * (nf - 1.0) / (nf * (nf - 2.0));
    let h: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (fx, fy, fz) = c.at(i, j);
                if !fy {
                    continue;
                }
                acc += f[j][0];
                if fx {
                    acc -= f[j][3];
                }
                if fz {
                    acc -= f[j][2];
                }
                if fx && fz {
                    acc += f[j][1];
                }
            }
            let v = f[i];
            (v[0] * v[1] - v[2] * v[3] + acc / (nf - 1.0)) / 3.0
        })
        .collect();
    (t_n, h)
}

pub fn dp_test(x: &Series, y: &Series, lag: usize, eps: Bandwidth) -> Result<NonparamCausalityResult> {
    let (xs, ys) = prepare(x, y, lag, "dp_test")?;
    let n = xs.len() - lag;
    let eps = match eps {
        Bandwidth::Fixed(e) => e,
        Bandwidth::Auto => dp_auto_bandwidth(n),
    };
    let c = Closeness::build(&xs, &ys, lag, eps);
    let local = dp_local_counts(&c);
    let cy = mean(&local.iter().map(|v| v[1]).collect::<Vec<_>>());
    if cy < GUARD {
        return Err(Error::DegenerateDistances { value: cy });
    }
    let (t_n, h) = dp_statistic_parts(&c);
    let hm = mean(&h);
    let centered: Vec<f64> = h.iter().map(|v| v - hm).collect();
    let s2 = 9.0 * bartlett_lrv(&centered, lrv_lags(n));
    if !(s2 > 0.0) {
        return Err(Error::DegenerateDistances { value: s2 });
    }
    let statistic = (n as f64).sqrt() * t_n / s2.sqrt();
    Ok(NonparamCausalityResult {
        lag,
        bandwidth: eps,
        statistic,
        p_value: normal_sf(statistic),
        kind: NonparamKind::DP,
    })
}
