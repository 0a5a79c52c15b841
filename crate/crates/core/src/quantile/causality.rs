//! The S_T causality-in-quantiles statistic and its subsampling p-value.
//!
//! For a QAR of `y` on its own lags, the sample moment
//! `psi_{t,j} = 1{y_t <= q_t(tau_j)} - tau_j` should be unpredictable from the
//! information vector `I_t` (lags of `y` and of `z`) under non-causality.
//! The statistic is the kernel-weighted quadratic form
//! `S = (T n)^{-1} sum_j psi_j' W psi_j`, `w_ts = exp(-|I_t - I_s|^2 / 2)`.

use serde::{Deserialize, Serialize};

use super::qar::{check_order, lag_rows};
use super::qreg::quantile_regression;
use super::QuantileGrid;
use crate::error::{Error, Result};
use crate::series::Series;
use crate::stats::standardize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsamplingConfig {
    /// Block constant in `b = floor(k T^{2/5})`.
    pub k: f64,
    pub seed: u64,
}

impl Default for SubsamplingConfig {
    fn default() -> Self {
        Self { k: 5.0, seed: 0 }
    }
}

impl SubsamplingConfig {
    pub fn block_size(&self, t: usize) -> usize {
        (self.k * (t as f64).powf(0.4)).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleOutcome {
    pub statistic: f64,
    /// Fraction of block statistics at or above the full-sample statistic.
    pub p_value: f64,
    /// Average of the block statistics (reported alongside, not a p-value).
    pub mean_block_statistic: f64,
    pub block: usize,
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCell {
    pub label: String,
    pub levels: Vec<f64>,
    pub outcome: SubsampleOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityRow {
    pub order: usize,
    pub joint: QuantileCell,
    pub per_tau: Vec<QuantileCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityQuantileResult {
    pub cause: String,
    pub effect: String,
    pub rows: Vec<CausalityRow>,
}

/// `(T n)^{-1} sum_j sum_t psi_{t,j} sum_s w_{t,s} psi_{s,j}`, accumulated in
/// exactly that loop order. `psi[j]` is the column for level `j`; `kernel`
/// is row-major `T x T`.
pub fn st_quadratic_form(psi: &[Vec<f64>], kernel: &[f64]) -> f64 {
    let n = psi.len();
    let t_len = psi.first().map_or(0, |c| c.len());
    let mut total = 0.0;
    for col in psi {
        for t in 0..t_len {
            let row = &kernel[t * t_len..(t + 1) * t_len];
            let mut inner = 0.0;
            for s in 0..t_len {
                inner += row[s] * col[s];
            }
            total += col[t] * inner;
        }
    }
    total / (t_len as f64 * n as f64)
}

/// Fitted quantile columns and kernel for one (sub)sample.
struct Prepared {
    y: Vec<f64>,
    kernel: Vec<f64>,
    /// `fitted[level][t]`.
    fitted: Vec<Vec<f64>>,
}

fn gaussian_kernel(info: &[Vec<f64>]) -> Vec<f64> {
    let t_len = info.first().map_or(0, |c| c.len());
    let mut k = vec![0.0; t_len * t_len];
    for t in 0..t_len {
        k[t * t_len + t] = 1.0;
        for s in t + 1..t_len {
            let d2: f64 = info.iter().map(|c| (c[t] - c[s]) * (c[t] - c[s])).sum();
            let w = (-0.5 * d2).exp();
            k[t * t_len + s] = w;
            k[s * t_len + t] = w;
        }
    }
    k
}

fn prepare(y: &[f64], z: &[f64], order: usize, q_lags: usize, levels: &[f64]) -> Result<Prepared> {
    let first = order.max(q_lags);
    let mut info = Vec::with_capacity(order + q_lags);
    for l in 1..=order {
        info.push(standardize(&(first..y.len()).map(|t| y[t - l]).collect::<Vec<_>>()));
    }
    for l in 1..=q_lags {
        info.push(standardize(&(first..z.len()).map(|t| z[t - l]).collect::<Vec<_>>()));
    }
    let x = lag_rows(y, order, first);
    let yy = y[first..].to_vec();
    let mut fitted = Vec::with_capacity(levels.len());
    for &tau in levels {
        let fit = quantile_regression(&x, &yy, tau)?;
        fitted.push(yy.iter().zip(&fit.residuals).map(|(a, r)| a - r).collect());
    }
    Ok(Prepared {
        y: yy,
        kernel: gaussian_kernel(&info),
        fitted,
    })
}

/// Statistic for the levels `idx` (positions into the prepared level list),
/// rearranging fitted quantiles across levels when there is more than one.
fn statistic_for(prep: &Prepared, idx: &[usize], taus: &[f64]) -> f64 {
    let t_len = prep.y.len();
    let n = idx.len();
    let mut psi = vec![vec![0.0; t_len]; n];
    let mut q = vec![0.0; n];
    for t in 0..t_len {
        for (j, &i) in idx.iter().enumerate() {
            q[j] = prep.fitted[i][t];
        }
        if n > 1 {
            q.sort_by(|a, b| a.total_cmp(b));
        }
        for j in 0..n {
            psi[j][t] = if prep.y[t] <= q[j] { 1.0 } else { 0.0 } - taus[j];
        }
    }
    st_quadratic_form(&psi, &prep.kernel)
}

fn check_inputs(y: &[f64], z: &[f64], order: usize, q_lags: usize) -> Result<()> {
    check_order(order)?;
    if y.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: z.len(),
        });
    }
    if q_lags == 0 {
        return Err(Error::InvalidArgument("q_lags must be at least 1".into()));
    }
    let need = 10 * (order + 2) + q_lags.saturating_sub(order);
    if y.len() < need {
        return Err(Error::TooShort {
            op: "st_statistic",
            need,
            got: y.len(),
        });
    }
    Ok(())
}

pub fn st_statistic(y: &Series, z: &Series, qar_order: usize, grid: &QuantileGrid, q_lags: usize) -> Result<f64> {
    check_inputs(y.values(), z.values(), qar_order, q_lags)?;
    let prep = prepare(y.values(), z.values(), qar_order, q_lags, grid.levels())?;
    let idx: Vec<usize> = (0..grid.len()).collect();
    Ok(statistic_for(&prep, &idx, grid.levels()))
}

pub fn subsample_pvalue(
    y: &Series,
    z: &Series,
    qar_order: usize,
    grid: &QuantileGrid,
    q_lags: usize,
    cfg: &SubsamplingConfig,
) -> Result<SubsampleOutcome> {
    Ok(subsample_pvalues(y, z, qar_order, std::slice::from_ref(grid), q_lags, cfg)?[0])
}

/// Subsampling outcomes for several grids, sharing quantile fits and kernels
/// across grids within each block.
pub fn subsample_pvalues(
    y: &Series,
    z: &Series,
    qar_order: usize,
    grids: &[QuantileGrid],
    q_lags: usize,
    cfg: &SubsamplingConfig,
) -> Result<Vec<SubsampleOutcome>> {
    let (yv, zv) = (y.values(), z.values());
    check_inputs(yv, zv, qar_order, q_lags)?;
    let t_len = yv.len();
    let b = cfg.block_size(t_len);
    if b < 20 || b >= t_len || t_len - b + 1 < 50 {
        return Err(Error::BlockTooShort { block: b, len: t_len });
    }
    let mut levels: Vec<f64> = Vec::new();
    let mut index: Vec<Vec<usize>> = Vec::with_capacity(grids.len());
    for g in grids {
        let mut idx = Vec::with_capacity(g.len());
        for &tau in g.levels() {
            let pos = match levels.iter().position(|l| (l - tau).abs() < 1e-12) {
                Some(p) => p,
                None => {
                    levels.push(tau);
                    levels.len() - 1
                }
            };
            idx.push(pos);
        }
        index.push(idx);
    }
    let full = prepare(yv, zv, qar_order, q_lags, &levels)?;
    let full_stats: Vec<f64> = grids
        .iter()
        .zip(&index)
        .map(|(g, idx)| statistic_for(&full, idx, g.levels()))
        .collect();
    let blocks = t_len - b + 1;
    let mut exceed = vec![0usize; grids.len()];
    let mut sums = vec![0.0; grids.len()];
    for start in 0..blocks {
        let prep = prepare(&yv[start..start + b], &zv[start..start + b], qar_order, q_lags, &levels)?;
        for (g_i, (g, idx)) in grids.iter().zip(&index).enumerate() {
            let s = statistic_for(&prep, idx, g.levels());
            sums[g_i] += s;
            if s >= full_stats[g_i] {
                exceed[g_i] += 1;
            }
        }
    }
    Ok((0..grids.len())
        .map(|i| SubsampleOutcome {
            statistic: full_stats[i],
            p_value: exceed[i] as f64 / blocks as f64,
            mean_block_statistic: sums[i] / blocks as f64,
            block: b,
            blocks,
        })
        .collect())
}

/// One row per QAR order (with `q_lags = order`): the joint grid and every
/// single level of it.
pub fn causality_table(
    y: &Series,
    z: &Series,
    orders: &[usize],
    joint: &QuantileGrid,
    cfg: &SubsamplingConfig,
) -> Result<CausalityQuantileResult> {
    let mut grids = vec![joint.clone()];
    for &tau in joint.levels() {
        grids.push(QuantileGrid::single(tau)?);
    }
    let mut rows = Vec::with_capacity(orders.len());
    for &order in orders {
        let out = subsample_pvalues(y, z, order, &grids, order, cfg)?;
        let cells: Vec<QuantileCell> = grids
            .iter()
            .zip(out)
            .map(|(g, o)| QuantileCell {
                label: g.label(),
                levels: g.levels().to_vec(),
                outcome: o,
            })
            .collect();
        let mut it = cells.into_iter();
        let joint_cell = it.next().expect("joint cell");
        rows.push(CausalityRow {
            order,
            joint: joint_cell,
            per_tau: it.collect(),
        });
    }
    Ok(CausalityQuantileResult {
        cause: z.name().to_string(),
        effect: y.name().to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = phi * y[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        y
    }

    fn pair(seed: u64, n: usize) -> (Series, Series) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = ar1(&mut rng, n, 0.3);
        let z = ar1(&mut rng, n, 0.3);
        (Series::from_values("y", y).unwrap(), Series::from_values("z", z).unwrap())
    }

    #[test]
    fn zero_psi_gives_zero() {
        let psi = vec![vec![0.0; 5]; 3];
        let kernel = vec![0.5; 25];
        assert_eq!(st_quadratic_form(&psi, &kernel), 0.0);
    }

    #[test]
    fn single_level_grid_matches_direct_statistic() {
        let (y, z) = pair(4, 300);
        let g = QuantileGrid::single(0.5).unwrap();
        let direct = st_statistic(&y, &z, 1, &g, 1).unwrap();
        let out = subsample_pvalue(&y, &z, 1, &g, 1, &SubsamplingConfig::default()).unwrap();
        assert_eq!(direct, out.statistic);
        assert!((0.0..=1.0).contains(&out.p_value));
    }

    #[test]
    fn affine_rescaling_of_cause_leaves_statistic_unchanged() {
        let (y, z) = pair(9, 200);
        let z2 = z.with_values("z", z.values().iter().map(|v| 3.0 * v + 11.0).collect()).unwrap();
        let g = QuantileGrid::deciles();
        let a = st_statistic(&y, &z, 2, &g, 2).unwrap();
        let b = st_statistic(&y, &z2, 2, &g, 2).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn block_contracts() {
        let (y, z) = pair(1, 120);
        let g = QuantileGrid::deciles();
        let big = SubsamplingConfig { k: 40.0, seed: 0 };
        assert!(matches!(subsample_pvalue(&y, &z, 1, &g, 1, &big), Err(Error::BlockTooShort { .. })));
        let short = SubsamplingConfig { k: 1.0, seed: 0 };
        assert!(matches!(subsample_pvalue(&y, &z, 1, &g, 1, &short), Err(Error::BlockTooShort { .. })));
        let (y2, _) = pair(2, 119);
        assert!(matches!(st_statistic(&y, &y2, 1, &g, 1), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn table_layout() {
        let (y, z) = pair(6, 260);
        let r = causality_table(&y, &z, &[1, 2], &QuantileGrid::deciles(), &SubsamplingConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].per_tau.len(), 9);
        assert_eq!(r.rows[0].joint.label, "[0.1, 0.9]");
        assert_eq!(r.rows[1].per_tau[4].label, "0.5");
        assert_eq!(r.cause, "z");
    }
}
