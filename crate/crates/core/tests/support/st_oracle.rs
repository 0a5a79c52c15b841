//! Brute-force S_T: explicit lag loops, a fresh kernel per pair and a triple
//! sum over (level, t, s). Quantile fits come from the library solver.

use causvol_core::quantile::quantile_regression;

fn zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mut sum = 0.0;
    for v in x {
        sum += v;
    }
    let m = sum / n;
    let mut ss = 0.0;
    for v in x {
        ss += (v - m) * (v - m);
    }
    let sd = (ss / (n - 1.0)).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    x.iter().map(|v| (v - m) / sd).collect()
}

pub fn st_bruteforce(y: &[f64], z: &[f64], order: usize, q_lags: usize, taus: &[f64]) -> f64 {
    let first = order.max(q_lags);
    let n = y.len() - first;
    let mut info: Vec<Vec<f64>> = Vec::new();
    for l in 1..=order {
        let col: Vec<f64> = (0..n).map(|i| y[first + i - l]).collect();
        info.push(zscore(&col));
    }
    for l in 1..=q_lags {
        let col: Vec<f64> = (0..n).map(|i| z[first + i - l]).collect();
        info.push(zscore(&col));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![1.0];
            for l in 1..=order {
                r.push(y[first + i - l]);
            }
            r
        })
        .collect();
    let yy = &y[first..];
    let mut q: Vec<Vec<f64>> = Vec::new();
    for &tau in taus {
        let fit = quantile_regression(&rows, yy, tau).unwrap();
        q.push((0..n).map(|i| yy[i] - fit.residuals[i]).collect());
    }
    let mut psi = vec![vec![0.0; n]; taus.len()];
    for t in 0..n {
        let mut col: Vec<f64> = q.iter().map(|c| c[t]).collect();
        if taus.len() > 1 {
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        for j in 0..taus.len() {
            let ind = if yy[t] <= col[j] { 1.0 } else { 0.0 };
            psi[j][t] = ind - taus[j];
        }
    }
    let weight = |t: usize, s: usize| -> f64 {
        if t == s {
            return 1.0;
        }
        let (a, b) = if t < s { (t, s) } else { (s, t) };
        let mut d2 = 0.0;
        for c in &info {
            d2 += (c[a] - c[b]) * (c[a] - c[b]);
        }
        (-0.5 * d2).exp()
    };
    let mut total = 0.0;
    for j in 0..taus.len() {
        for t in 0..n {
            let mut inner = 0.0;
            for s in 0..n {
                inner += weight(t, s) * psi[j][s];
            }
            total += psi[j][t] * inner;
        }
    }
    total / (n as f64 * taus.len() as f64)
}
