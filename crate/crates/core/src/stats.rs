//! Small numerical helpers shared across the test batteries.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::{erfc, erfc_inv};

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `P(Z > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile: p = {p} outside (0, 1)");
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub fn two_sided_normal_p(z: f64) -> f64 {
    (2.0 * normal_sf(z.abs())).min(1.0)
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let d = ChiSquared::new(df).expect("positive degrees of freedom");
    d.sf(x).clamp(0.0, 1.0)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Centers and scales to unit sample variance. Constant input is only centered.
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let s = std_dev(x);
    let s = if s > 0.0 { s } else { 1.0 };
    x.iter().map(|v| (v - m) / s).collect()
}

/// Bartlett-kernel long-run variance of a mean-zero sequence,
/// `gamma_0 + 2 sum_{j=1}^{L} (1 - j/(L+1)) gamma_j` with `1/n` autocovariances.
pub fn bartlett_lrv(u: &[f64], lags: usize) -> f64 {
    let n = u.len();
    let gamma = |j: usize| u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut lrv = gamma(0);
    for j in 1..=lags.min(n.saturating_sub(1)) {
        lrv += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j);
    }
    lrv
}

/// Bartlett long-run covariance matrix of the columns of `u` (`n x k`,
/// row-major), after demeaning each column.
pub fn bartlett_lrcov(u: &[Vec<f64>], lags: usize) -> Vec<Vec<f64>> {
    let n = u.len();
    let k = u.first().map_or(0, |r| r.len());
    let means: Vec<f64> = (0..k).map(|c| u.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    let d: Vec<Vec<f64>> = u
        .iter()
        .map(|r| r.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect();
    let mut out = vec![vec![0.0; k]; k];
    for j in 0..=lags.min(n.saturating_sub(1)) {
        let w = if j == 0 { 1.0 } else { 1.0 - j as f64 / (lags as f64 + 1.0) };
        for a in 0..k {
            for b in 0..k {
                let mut g = 0.0;
                for t in j..n {
                    g += d[t][a] * d[t - j][b];
                }
                g /= n as f64;
                if j == 0 {
                    out[a][b] += g;
                } else {
                    // gamma_j + gamma_j'
                    out[a][b] += w * g;
                    out[b][a] += w * g;
                }
            }
        }
    }
    out
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Linear-interpolated empirical quantile of already sorted data (type 7).
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    sorted_quantile(&s, p)
}
