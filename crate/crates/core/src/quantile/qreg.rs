//! Linear quantile regression by exact basis descent on the check loss.
//!
//! A basis is a set of `p` observations whose rows form an invertible block;
//! the candidate coefficient vector interpolates them. Each step moves along
//! the edge that frees one basis observation in the direction with the most
//! negative directional derivative, and stops at the weighted-median
//! breakpoint, where the blocking observation enters the basis.

use crate::error::{Error, Result};
use crate::linalg::{invert_small, ols};
use nalgebra::DMatrix;

pub fn check_loss(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

#[derive(Debug, Clone)]
pub struct QuantileFit {
    pub tau: f64,
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub basis: Vec<usize>,
}

const PIVOT_TOL: f64 = 1e-11;

fn basis_inverse(x: &[Vec<f64>], basis: &[usize]) -> Option<Vec<f64>> {
    let p = basis.len();
    let mut a = Vec::with_capacity(p * p);
    for &i in basis {
        a.extend_from_slice(&x[i]);
    }
    invert_small(&a, p, PIVOT_TOL)
}

/// `p` rows with the smallest absolute OLS residual that are linearly independent.
fn initial_basis(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<usize>> {
    let n = x.len();
    let p = x[0].len();
    let dm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let fit = ols(&dm, y, "quantile regression").map_err(|_| Error::Collinear {
        context: "quantile regression design".into(),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fit.residuals[a].abs().total_cmp(&fit.residuals[b].abs()).then(a.cmp(&b)));
    // Greedy independence check via Gram-Schmidt on candidate rows.
    let mut basis = Vec::with_capacity(p);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(p);
    for i in order {
        let mut v = x[i].clone();
        for q in &ortho {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= d * qi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = x[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 * scale.max(1.0) {
            ortho.push(v.iter().map(|a| a / norm).collect());
            basis.push(i);
            if basis.len() == p {
                return Ok(basis);
            }
        }
    }
    Err(Error::Collinear {
        context: "quantile regression design".into(),
    })
}

/// Minimizes `sum_i rho_tau(y_i - x_i' beta)` exactly. `x` holds rows.
pub fn quantile_regression(x: &[Vec<f64>], y: &[f64], tau: f64) -> Result<QuantileFit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidGrid(format!("tau = {tau} outside (0, 1)")));
    }
    let n = x.len();
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let p = x.first().map_or(0, |r| r.len());
    if p == 0 || n <= p {
        return Err(Error::TooShort {
            op: "quantile_regression",
            need: p + 1,
            got: n,
        });
    }
    let mut basis = initial_basis(x, y)?;
    let mut in_basis = vec![false; n];
    for &i in &basis {
        in_basis[i] = true;
    }
    let max_iter = 1000 + 50 * n;
    let mut a = vec![0.0; n * p];
    let mut breaks: Vec<(f64, usize, f64)> = Vec::with_capacity(n);
    for _ in 0..max_iter {
        let inv = basis_inverse(x, &basis).ok_or(Error::NonConvergence { tau })?;
        let mut beta = vec![0.0; p];
        for (r, b) in beta.iter_mut().enumerate() {
            *b = basis.iter().enumerate().map(|(c, &i)| inv[r * p + c] * y[i]).sum();
        }
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - x[i].iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        // a[i][k] = x_i' (column k of inverse): change in fit of i per unit move of basis k
        for i in 0..n {
            for k in 0..p {
                a[i * p + k] = (0..p).map(|r| x[i][r] * inv[r * p + k]).sum();
            }
        }
        let scale = resid.iter().fold(0.0f64, |m, r| m.max(r.abs())).max(1.0);
        let zero_tol = 1e-12 * scale;
        // Directional derivative for each (k, s): moving basis residual k to -s*t.
        let mut best: Option<(f64, usize, f64)> = None;
        for k in 0..p {
            for s in [1.0, -1.0] {
                let mut g = if s > 0.0 { 1.0 - tau } else { tau };
                for i in 0..n {
                    if in_basis[i] {
                        continue;
                    }
                    let d = s * a[i * p + k];
                    let r = resid[i];
                    if r > zero_tol {
                        g -= tau * d;
                    } else if r < -zero_tol {
                        g += (1.0 - tau) * d;
                    } else {
                        g += if d > 0.0 { (1.0 - tau) * d } else { -tau * d };
                    }
                }
                if g < -1e-12 && best.is_none_or(|(bg, _, _)| g < bg) {
                    best = Some((g, k, s));
                }
            }
        }
        let Some((g0, k, s)) = best else {
            let objective = resid.iter().map(|&u| check_loss(u, tau)).sum();
            return Ok(QuantileFit {
                tau,
                beta,
                residuals: resid,
                objective,
                basis,
            });
        };
        // Breakpoints where a nonbasis residual crosses zero along the edge.
        breaks.clear();
        for i in 0..n {
            if in_basis[i] {
                continue;
            }
            let d = s * a[i * p + k];
            let r = resid[i];
            if d.abs() < 1e-14 || r.abs() <= zero_tol {
                continue;
            }
            let t = r / d;
            if t > 0.0 {
                breaks.push((t, i, d.abs()));
            }
        }
        breaks.sort_by(|u, v| u.0.total_cmp(&v.0).then(u.1.cmp(&v.1)));
        let mut slope = g0;
        let mut entering = None;
        for &(_, i, w) in &breaks {
            slope += w;
            if slope >= 0.0 {
                entering = Some(i);
                break;
            }
        }
        let Some(j) = entering else {
            return Err(Error::NonConvergence { tau });
        };
        in_basis[basis[k]] = false;
        in_basis[j] = true;
        basis[k] = j;
    }
    Err(Error::NonConvergence { tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn objective(x: &[Vec<f64>], y: &[f64], b: &[f64], tau: f64) -> f64 {
        x.iter()
            .zip(y)
            .map(|(r, yi)| check_loss(yi - r.iter().zip(b).map(|(a, c)| a * c).sum::<f64>(), tau))
            .sum()
    }

    #[test]
    fn intercept_only_gives_sample_quantile() {
        let y = [5.0, 1.0, 3.0, 9.0, 7.0, 2.0, 8.0];
        let x: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        let f = quantile_regression(&x, &y, 0.5).unwrap();
        assert_relative_eq!(f.beta[0], 5.0);
        let f = quantile_regression(&x, &y, 0.2).unwrap();
        // 0.2 * 7 = 1.4 -> second smallest
        assert_relative_eq!(f.beta[0], 2.0);
    }

    #[test]
    fn optimum_beats_all_elemental_fits() {
        // exhaustive oracle: the minimum is attained at an interpolating pair of points
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for tau in [0.1, 0.35, 0.5, 0.9] {
            let n = 25;
            let xs: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = xs.iter().map(|v| 1.0 + 0.5 * v + rng.sample::<f64, _>(StandardNormal)).collect();
            let x: Vec<Vec<f64>> = xs.iter().map(|v| vec![1.0, *v]).collect();
            let f = quantile_regression(&x, &y, tau).unwrap();
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    let b1 = (y[j] - y[i]) / (xs[j] - xs[i]);
                    let b0 = y[i] - b1 * xs[i];
                    best = best.min(objective(&x, &y, &[b0, b1], tau));
                }
            }
            assert_relative_eq!(f.objective, best, max_relative = 1e-10);
        }
    }

    #[test]
    fn sign_balance_at_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, rng.sample(StandardNormal), rng.random::<f64>()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[1] - r[2] + rng.sample::<f64, _>(StandardNormal)).collect();
        for tau in [0.05, 0.3, 0.5, 0.95] {
            let f = quantile_regression(&x, &y, tau).unwrap();
            let neg = f.residuals.iter().filter(|r| **r < -1e-9).count() as f64;
            let nonpos = f.residuals.iter().filter(|r| **r <= 1e-9).count() as f64;
            assert!(neg <= tau * n as f64 + 1e-9);
            assert!(nonpos >= tau * n as f64 - 1e-9);
        }
    }

    #[test]
    fn handles_ties_and_rejects_collinear() {
        let y = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0];
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, (i / 3) as f64]).collect();
        let f = quantile_regression(&x, &y, 0.5).unwrap();
        assert!(f.objective < 1e-12);
        let xc: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(quantile_regression(&xc, &y, 0.5), Err(Error::Collinear { .. })));
    }
}
