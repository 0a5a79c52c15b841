//! QAR(3) augmented with one lag of a second series; the lagged regressor's
//! coefficient is traced across quantiles with moving-block bootstrap bands.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qreg::quantile_regression;
use super::QuantileGrid;
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::rng::stream;
use crate::series::Series;
use crate::stats::std_dev;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Two-sided normal multiplier for the bands.
    pub z: f64,
}

impl Default for AugmentedConfig {
    fn default() -> Self {
        Self {
            replicates: 200,
            seed: 0,
            z: 1.959963984540054,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBand {
    pub tau: f64,
    pub beta: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BetaBand {
    pub fn covers(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedQar {
    pub cause: String,
    pub effect: String,
    pub block_length: usize,
    pub bands: Vec<BetaBand>,
}

const OWN_LAGS: usize = 3;

pub fn augmented_qar(y: &Series, z: &Series, grid: &QuantileGrid, cfg: &AugmentedConfig) -> Result<AugmentedQar> {
    let (yv, zv) = (y.values(), z.values());
    if yv.len() != zv.len() {
        return Err(Error::LengthMismatch {
            left: yv.len(),
            right: zv.len(),
        });
    }
    let need = 10 * (OWN_LAGS + 2);
    if yv.len() < need {
        return Err(Error::TooShort {
            op: "augmented_qar",
            need,
            got: yv.len(),
        });
    }
    let rows: Vec<Vec<f64>> = (OWN_LAGS..yv.len())
        .map(|t| vec![1.0, yv[t - 1], yv[t - 2], yv[t - 3], zv[t - 1]])
        .collect();
    let resp: Vec<f64> = yv[OWN_LAGS..].to_vec();
    let n = rows.len();
    let dm = DMatrix::from_fn(n, 5, |i, j| rows[i][j]);
    ols(&dm, &resp, "augmented QAR").map_err(|_| Error::Collinear {
        context: format!("lagged {} against own lags of {}", z.name(), y.name()),
    })?;
    let block = (n as f64).cbrt().ceil() as usize;
    let point: Vec<f64> = grid
        .levels()
        .iter()
        .map(|&tau| quantile_regression(&rows, &resp, tau).map(|f| f.beta[4]))
        .collect::<Result<_>>()?;
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.replicates); grid.len()];
    let starts = n - block + 1;
    for r in 0..cfg.replicates {
        let mut rng = stream(cfg.seed, "augmented_qar", r as u64);
        let mut bx = Vec::with_capacity(n);
        let mut by = Vec::with_capacity(n);
        while bx.len() < n {
            let s = rng.random_range(0..starts);
            for i in s..(s + block).min(s + n - bx.len()) {
                bx.push(rows[i].clone());
                by.push(resp[i]);
            }
        }
        for (j, &tau) in grid.levels().iter().enumerate() {
            // a resample can be rank deficient; skip it rather than abort
            if let Ok(f) = quantile_regression(&bx, &by, tau) {
                draws[j].push(f.beta[4]);
            }
        }
    }
    let bands = grid
        .levels()
        .iter()
        .zip(point)
        .zip(&draws)
        .map(|((&tau, beta), d)| {
            let se = if d.len() > 1 { std_dev(d) } else { f64::NAN };
            BetaBand {
                tau,
                beta,
                std_error: se,
                lower: beta - cfg.z * se,
                upper: beta + cfg.z * se,
            }
        })
        .collect();
    Ok(AugmentedQar {
        cause: z.name().to_string(),
        effect: y.name().to_string(),
        block_length: block,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn recovers_lagged_effect() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 3000;
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = 0.3 * z[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        let ys = Series::from_values("y", y).unwrap();
        let zs = Series::from_values("z", z).unwrap();
        let cfg = AugmentedConfig {
            replicates: 20,
            ..Default::default()
        };
        let grid = QuantileGrid::custom(vec![0.1, 0.5, 0.9]).unwrap();
        let r = augmented_qar(&ys, &zs, &grid, &cfg).unwrap();
        for b in &r.bands {
            assert!((b.beta - 0.3).abs() < 0.08, "{b:?}");
            assert!(b.lower < b.beta && b.beta < b.upper);
        }
        assert_eq!(r.block_length, 15);
    }

    #[test]
    fn shifted_copy_is_collinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let mut z = vec![0.0; 200];
        z[1..].copy_from_slice(&y[..199]);
        let ys = Series::from_values("y", y).unwrap();
        let zs = Series::from_values("z", z).unwrap();
        let r = augmented_qar(&ys, &zs, &QuantileGrid::deciles(), &AugmentedConfig::default());
        assert!(matches!(r, Err(Error::Collinear { .. })));
    }
}
