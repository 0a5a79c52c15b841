//! Adaptive random-walk Metropolis and the posterior-draw container.

use causvol_core::series::Series;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spec::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub draws: usize,
    pub seed: u64,
    /// Every `thin_paths`-th retained draw of the latent path is stored.
    pub thin_paths: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in: 2000,
            draws: 5000,
            seed: 0,
            thin_paths: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub spec: ModelSpec,
    pub param_names: Vec<String>,
    /// One row per retained draw, constrained scale.
    pub draws: Vec<Vec<f64>>,
    pub blocks: Vec<String>,
    pub acceptance_rates: Vec<f64>,
    pub seed: u64,
    pub data_fingerprint: String,
    /// Thinned latent log-variance paths (SV only).
    pub paths: Vec<Vec<f64>>,
    /// Posterior mean of `exp(h_t / 2)` over all retained draws (SV only).
    pub volatility: Option<Series>,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| p == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.index_of(name)?;
        Some(self.draws.iter().map(|r| r[j]).collect())
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let n = self.draws.len() as f64;
        let mut m = vec![0.0; self.param_names.len()];
        for r in &self.draws {
            for (mi, x) in m.iter_mut().zip(r) {
                *mi += x / n;
            }
        }
        m
    }

    pub fn posterior_sd(&self) -> Vec<f64> {
        let m = self.posterior_mean();
        let n = self.draws.len() as f64;
        let mut v = vec![0.0; m.len()];
        for r in &self.draws {
            for ((vi, x), mi) in v.iter_mut().zip(r).zip(&m) {
                *vi += (x - mi).powi(2) / (n - 1.0);
            }
        }
        v.into_iter().map(f64::sqrt).collect()
    }
}

/// Hex digest identifying a data vector; estimates on different data never compare.
pub fn fingerprint(y: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in y {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().take(12).map(|b| format!("{b:02x}")).collect()
}

const ADAPT_EVERY: usize = 100;
const ADAPT_AFTER: usize = 200;

/// Random-walk Metropolis block on an unconstrained vector. During burn-in the
/// proposal covariance tracks the empirical covariance of the chain and a
/// global scale is tuned toward the optimal acceptance rate.
#[derive(Debug, Clone)]
pub(crate) struct Rwm {
    dim: usize,
    chol: Vec<f64>,
    log_scale: f64,
    target: f64,
    history: Vec<Vec<f64>>,
    iter: usize,
    accepted: usize,
    counted: usize,
    empirical: bool,
}

impl Rwm {
    pub(crate) fn new(dim: usize, init_sd: &[f64]) -> Self {
        let mut chol = vec![0.0; dim * dim];
        for i in 0..dim {
            chol[i * dim + i] = init_sd[i];
        }
        Self {
            dim,
            chol,
            log_scale: 0.0,
            target: if dim == 1 { 0.44 } else { 0.234 },
            history: Vec::new(),
            iter: 0,
            accepted: 0,
            counted: 0,
            empirical: false,
        }
    }

    fn propose<R: Rng>(&self, u: &[f64], rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let s = self.log_scale.exp();
        (0..d)
            .map(|i| u[i] + s * (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum::<f64>())
            .collect()
    }

    /// One Metropolis step. `lp` must hold the target at `u` on entry.
    pub(crate) fn step<R: Rng, F: FnMut(&[f64]) -> f64>(
        &mut self,
        u: &mut Vec<f64>,
        lp: &mut f64,
        mut target: F,
        rng: &mut R,
        adapting: bool,
    ) -> bool {
        let prop = self.propose(u, rng);
        let lp_prop = target(&prop);
        let log_a = lp_prop - *lp;
        let accept = lp_prop.is_finite() && (log_a >= 0.0 || rng.random::<f64>().ln() < log_a);
        if accept {
            *u = prop;
            *lp = lp_prop;
        }
        if adapting {
            self.adapt(accept, u);
        } else {
            self.counted += 1;
            self.accepted += accept as usize;
        }
        accept
    }

    fn adapt(&mut self, accept: bool, u: &[f64]) {
        self.iter += 1;
        let a = if accept { 1.0 } else { 0.0 };
        self.log_scale += (a - self.target) / (self.iter as f64).powf(0.6);
        self.log_scale = self.log_scale.clamp(-12.0, 5.0);
        self.history.push(u.to_vec());
        if self.history.len() >= ADAPT_AFTER && self.history.len() % ADAPT_EVERY == 0 {
            if let Some(l) = self.empirical_chol() {
                self.chol = l;
                if !self.empirical {
                    self.log_scale = 0.0;
                    self.empirical = true;
                }
            }
        }
    }

    fn empirical_chol(&self) -> Option<Vec<f64>> {
        let d = self.dim;
        // use the second half so the transient from the start point is dropped
        let h = &self.history[self.history.len() / 2..];
        let n = h.len() as f64;
        let mut m = vec![0.0; d];
        for r in h {
            for (mi, x) in m.iter_mut().zip(r) {
                *mi += x / n;
            }
        }
        let mut c = DMatrix::<f64>::zeros(d, d);
        for r in h {
            for i in 0..d {
                for j in 0..=i {
                    c[(i, j)] += (r[i] - m[i]) * (r[j] - m[j]) / (n - 1.0);
                }
            }
        }
        let k = 2.38 * 2.38 / d as f64;
        for i in 0..d {
            for j in 0..i {
                c[(j, i)] = c[(i, j)];
            }
        }
        let c = c * k + DMatrix::identity(d, d) * 1e-10;
        let l = c.cholesky()?.l();
        Some((0..d * d).map(|idx| l[(idx / d, idx % d)]).collect())
    }

    pub(crate) fn acceptance_rate(&self) -> f64 {
        if self.counted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.counted as f64
        }
    }
}

pub(crate) const MIN_ACCEPTANCE: f64 = 0.01;

pub(crate) fn check_divergence(block: &str, rate: f64) -> Result<()> {
    if rate < MIN_ACCEPTANCE {
        return Err(Error::ChainDivergence(format!(
            "{block} acceptance {rate:.4} after adaptation"
        )));
    }
    Ok(())
}

pub(crate) fn constant_guard(y: &[f64]) -> Result<()> {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if y.iter().all(|v| (v - m).abs() <= 1e-12 * scale) {
        return Err(Error::ChainDivergence("constant series has no volatility to estimate".into()));
    }
    Ok(())
}

/// Potential scale reduction factor per parameter across chains.
pub fn gelman_rubin(chains: &[&PosteriorDraws]) -> Result<Vec<f64>> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidParams("Gelman-Rubin needs at least two chains".into()));
    }
    let n = chains.iter().map(|c| c.n_draws()).min().unwrap_or(0);
    if n < 2 {
        return Err(Error::EmptyFit);
    }
    let d = chains[0].param_names.len();
    let nf = n as f64;
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let means: Vec<f64> = chains
            .iter()
            .map(|c| c.draws[..n].iter().map(|r| r[j]).sum::<f64>() / nf)
            .collect();
        let grand = means.iter().sum::<f64>() / m as f64;
        let b = nf / (m as f64 - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
        let w = chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| c.draws[..n].iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / (nf - 1.0))
            .sum::<f64>()
            / m as f64;
        let var = (nf - 1.0) / nf * w + b / nf;
        out.push((var / w).sqrt());
    }
    Ok(out)
}
