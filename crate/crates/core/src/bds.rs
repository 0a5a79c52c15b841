//! BDS test for serial independence.
//!
//! Pairs are counted as close when `|x_i - x_j| < eps` (strict), histories
//! are compared in the sup norm, and the variance uses the Brock, Dechert,
//! Scheinkman and LeBaron expression with the `k` estimator computed from
//! the full-sample indicator matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::{std_dev, two_sided_normal_p};
use crate::var::fit_var;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsRule {
    TimesStd(f64),
    Absolute(f64),
}

impl Default for EpsRule {
    fn default() -> Self {
        EpsRule::TimesStd(0.7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdsDimension {
    pub m: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// Raw `C_m - C_1^m` on the aligned sample.
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdsResult {
    pub epsilon: f64,
    pub per_dimension: Vec<BdsDimension>,
    pub n_effective: usize,
}

impl BdsResult {
    pub fn dimension(&self, m: usize) -> Option<&BdsDimension> {
        self.per_dimension.iter().find(|d| d.m == m)
    }
}

/// Upper-triangle indicator store: `close[i * n + j]` for `i < j`.
struct Indicators {
    n: usize,
    close: Vec<bool>,
}

impl Indicators {
    fn new(x: &[f64], eps: f64) -> Self {
        let n = x.len();
        let mut close = vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                close[i * n + j] = (x[i] - x[j]).abs() < eps;
            }
        }
        Self { n, close }
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.close[i * self.n + j]
    }
}

fn pairs(n: usize) -> f64 {
    n as f64 * (n as f64 - 1.0) / 2.0
}

/// Fraction of pairs of `m`-histories within sup-norm distance `eps`.
pub fn correlation_integral(s: &Series, m: usize, eps: f64) -> Result<f64> {
    correlation_integral_values(s.values(), m, eps)
}

pub fn correlation_integral_values(x: &[f64], m: usize, eps: f64) -> Result<f64> {
    if m == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation_integral needs m >= 1 and eps > 0 (m = {m}, eps = {eps})"
        )));
    }
    if x.len() < m + 1 {
        return Err(Error::TooShort {
            op: "correlation_integral",
            need: m + 1,
            got: x.len(),
        });
    }
    let ind = Indicators::new(x, eps);
    let h = x.len() - m + 1;
    let mut count = 0usize;
    for i in 0..h {
        for j in i + 1..h {
            if (0..m).all(|l| ind.get(i + l, j + l)) {
                count += 1;
            }
        }
    }
    Ok(count as f64 / pairs(h))
}

/// `C_1 .. C_max` where `C_m` runs over the `n - m + 1` histories.
fn correlation_sums(ind: &Indicators, max_dim: usize) -> Vec<f64> {
    let n = ind.n;
    let mut joint = ind.close.clone();
    let mut out = Vec::with_capacity(max_dim);
    for m in 1..=max_dim {
        let h = n - m + 1;
        if m > 1 {
            for i in 0..h {
                for j in i + 1..h {
                    let idx = i * n + j;
                    joint[idx] = joint[idx] && ind.get(i + m - 1, j + m - 1);
                }
            }
        }
        let mut count = 0usize;
        for i in 0..h {
            count += joint[i * n + i + 1..i * n + h].iter().filter(|b| **b).count();
        }
        out.push(count as f64 / pairs(h));
    }
    out
}

/// One-dimensional integral over observations `from..n`.
fn c1_from(ind: &Indicators, from: usize) -> f64 {
    let n = ind.n;
    let mut count = 0usize;
    for i in from..n {
        count += ind.close[i * n + i + 1..i * n + n].iter().filter(|b| **b).count();
    }
    count as f64 / pairs(n - from)
}

fn k_estimate(ind: &Indicators) -> f64 {
    let n = ind.n;
    let mut rows = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if ind.get(i, j) {
                rows[i] += 1;
                rows[j] += 1;
            }
        }
    }
    let s: f64 = rows.iter().map(|&r| (r * r.saturating_sub(1)) as f64).sum();
    let nf = n as f64;
    s / (nf * (nf - 1.0) * (nf - 2.0))
}

fn bds_variance(k: f64, c: f64, m: usize) -> f64 {
    let mf = m as f64;
    let mut tmp = 0.0;
    for j in 1..m {
        tmp += k.powi((m - j) as i32) * c.powi((2 * j) as i32);
    }
    4.0 * (k.powi(m as i32) + 2.0 * tmp + (mf - 1.0).powi(2) * c.powi(2 * m as i32)
        - mf * mf * k * c.powi(2 * m as i32 - 2))
}

pub fn bds_test(s: &Series, dims: std::ops::RangeInclusive<usize>, eps_rule: EpsRule) -> Result<BdsResult> {
    bds_test_values(s.values(), dims, eps_rule)
}

pub fn bds_test_values(x: &[f64], dims: std::ops::RangeInclusive<usize>, eps_rule: EpsRule) -> Result<BdsResult> {
    let n = x.len();
    if n < 50 {
        return Err(Error::TooShort {
            op: "bds_test",
            need: 50,
            got: n,
        });
    }
    if *dims.start() < 2 || dims.is_empty() {
        return Err(Error::InvalidArgument("BDS dimensions must start at 2 or above".into()));
    }
    let eps = match eps_rule {
        EpsRule::TimesStd(f) => f * std_dev(x),
        EpsRule::Absolute(v) => v,
    };
    if !(eps > 0.0) {
        return Err(Error::DegenerateEpsilon { c1: 1.0 });
    }
    let ind = Indicators::new(x, eps);
    let max_dim = *dims.end();
    let sums = correlation_sums(&ind, max_dim);
    let c1 = sums[0];
    if c1 <= 0.0 || c1 >= 1.0 {
        return Err(Error::DegenerateEpsilon { c1 });
    }
    let k = k_estimate(&ind);
    let per_dimension = dims
        .map(|m| {
            let c1m = c1_from(&ind, m - 1);
            let effect = sums[m - 1] - c1m.powi(m as i32);
            let sd = bds_variance(k, c1, m).sqrt();
            let statistic = ((n - m + 1) as f64).sqrt() * effect / sd;
            BdsDimension {
                m,
                statistic,
                p_value: two_sided_normal_p(statistic),
                effect,
            }
        })
        .collect();
    Ok(BdsResult {
        epsilon: eps,
        per_dimension,
        n_effective: n,
    })
}

/// Fits a VAR at `lag` and runs [`bds_test`] on each equation's residuals,
/// in system order.
pub fn bds_on_var_residuals(
    system: &[Series],
    lag: usize,
    dims: std::ops::RangeInclusive<usize>,
    eps_rule: EpsRule,
) -> Result<Vec<(String, BdsResult)>> {
    let model = fit_var(system, lag)?;
    model
        .residuals
        .iter()
        .map(|r| Ok((r.name().to_string(), bds_test(r, dims.clone(), eps_rule)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn brute(x: &[f64], m: usize, eps: f64) -> f64 {
        let h = x.len() - m + 1;
        let mut c = 0;
        let mut tot = 0;
        for i in 0..h {
            for j in 0..h {
                if i < j {
                    tot += 1;
                    let d = (0..m).map(|l| (x[i + l] - x[j + l]).abs()).fold(0.0, f64::max);
                    if d < eps {
                        c += 1;
                    }
                }
            }
        }
        c as f64 / tot as f64
    }

    #[test]
    fn small_cases() {
        let x = [0.0, 10.0, 0.0, 10.0, 0.0];
        assert_relative_eq!(correlation_integral_values(&x, 1, 1.0).unwrap(), 0.4);
        let y = [0.3, -1.2, 0.8, 0.1, 2.0, -0.4];
        assert_eq!(correlation_integral_values(&y, 2, 0.9).unwrap(), brute(&y, 2, 0.9));
        assert_eq!(correlation_integral_values(&y, 1, 100.0).unwrap(), 1.0);
        assert!(matches!(correlation_integral_values(&y[..2], 2, 1.0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn sums_match_oracle_for_short_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 4..=12 {
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let ind = Indicators::new(&x, 0.8);
            let sums = correlation_sums(&ind, 3.min(n - 1));
            for (m, c) in sums.iter().enumerate() {
                assert_eq!(*c, brute(&x, m + 1, 0.8), "n={n} m={}", m + 1);
            }
        }
    }

    #[test]
    fn k_matches_triple_enumeration() {
        let x = [0.1, 0.5, -0.3, 0.9, 0.2, -0.7, 0.4, 0.0];
        let eps = 0.5;
        let ind = Indicators::new(&x, eps);
        let n = x.len();
        let close = |i: usize, j: usize| (x[i] - x[j]).abs() < eps;
        let mut c = 0;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    if i != j && j != l && i != l && close(i, j) && close(j, l) {
                        c += 1;
                    }
                }
            }
        }
        let oracle = c as f64 / (n * (n - 1) * (n - 2)) as f64;
        assert_relative_eq!(k_estimate(&ind), oracle, epsilon = 1e-15);
    }

    #[test]
    fn statistic_matches_reference_implementation() {
        // values frozen from the statsmodels `bds` routine on this series
        let x: Vec<f64> = (0..60).map(|i| ((i * 37 % 23) as f64 - 11.0) / 7.0 + (i as f64 * 0.3).sin()).collect();
        let r = bds_test_values(&x, 2..=3, EpsRule::TimesStd(1.5)).unwrap();
        assert_relative_eq!(r.per_dimension[0].statistic, -5.90094109, epsilon = 1e-7);
        assert_relative_eq!(r.per_dimension[1].statistic, -1.67076521, epsilon = 1e-7);
        assert_relative_eq!(r.per_dimension[1].p_value, 9.47680621e-02, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_epsilon() {
        let x: Vec<f64> = (0..60).map(|i| i as f64).collect();
        assert!(matches!(
            bds_test_values(&x, 2..=3, EpsRule::Absolute(1000.0)),
            Err(Error::DegenerateEpsilon { .. })
        ));
        assert!(matches!(
            bds_test_values(&x, 2..=3, EpsRule::Absolute(0.5)),
            Err(Error::DegenerateEpsilon { .. })
        ));
    }
}
