//! Joint draws of the log-variance path and the integrated likelihood.
//!
//! The prior precision of `h` is banded; adding the clamped negative Hessian
//! of the observation density keeps it banded, so the Gaussian approximation
//! at the conditional mode costs O(T) to build, factor and sample. Draws go
//! through an accept-reject Metropolis-Hastings step against the exact target.
//! Paths longer than [`MAX_BLOCK`] are updated in contiguous blocks, each
//! conditional on the rest, because the accuracy of one Gaussian
//! approximation for the whole path decays with its length.

use causvol_core::rng::stream;
use causvol_core::stats::log_sum_exp;
use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::banded::{Band2, BandChol};
use super::obs::ObsModel;
use super::SvParams;
use crate::error::{Error, Result};
use crate::spec::ModelSpec;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const MAX_NEWTON: usize = 200;
const MAX_AR_ATTEMPTS: usize = 100;
/// Longest stretch of the path drawn in one accept-reject step.
pub(crate) const MAX_BLOCK: usize = 400;

/// Stationary variance and first autocovariance of the AR(2) state.
pub(crate) fn stationary_moments(phi1: f64, phi2: f64, sigma2: f64) -> (f64, f64) {
    let g0 = sigma2 * (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2).powi(2) - phi1 * phi1));
    (g0, phi1 * g0 / (1.0 - phi2))
}

/// Precision of `h - mu_h` under the stationary AR prior.
pub fn state_precision(p: &SvParams, n: usize) -> Band2 {
    let (phi1, phi2, s2) = (p.phi, p.phi2, p.sigma_h2);
    let (g0, g1) = stationary_moments(phi1, phi2, s2);
    let det = g0 * g0 - g1 * g1;
    let mut q = Band2::zeros(n);
    q.d0[0] += g0 / det;
    q.d0[1] += g0 / det;
    q.d1[1] += -g1 / det;
    let a = [-phi2 / s2.sqrt(), -phi1 / s2.sqrt(), 1.0 / s2.sqrt()];
    for t in 2..n {
        q.d0[t - 2] += a[0] * a[0];
        q.d0[t - 1] += a[1] * a[1];
        q.d0[t] += a[2] * a[2];
        q.d1[t - 1] += a[0] * a[1];
        q.d1[t] += a[1] * a[2];
        q.d2[t] += a[0] * a[2];
    }
    q
}

/// `log p(h | theta)`, evaluated by prediction errors.
pub fn state_log_prior(p: &SvParams, h: &[f64]) -> f64 {
    let (g0, g1) = stationary_moments(p.phi, p.phi2, p.sigma_h2);
    let x: Vec<f64> = h.iter().map(|v| v - p.mu_h).collect();
    let det = g0 * g0 - g1 * g1;
    let quad0 = (g0 * x[0] * x[0] - 2.0 * g1 * x[0] * x[1] + g0 * x[1] * x[1]) / det;
    let mut lp = -LN_2PI - 0.5 * det.ln() - 0.5 * quad0;
    for t in 2..x.len() {
        let e = x[t] - p.phi * x[t - 1] - p.phi2 * x[t - 2];
        lp += -0.5 * (LN_2PI + p.sigma_h2.ln() + e * e / p.sigma_h2);
    }
    lp
}

pub(crate) struct Target<'a> {
    obs: ObsModel<'a>,
    p: SvParams,
    q: Band2,
}

impl<'a> Target<'a> {
    pub(crate) fn new(spec: &ModelSpec, p: &SvParams, y: &'a [f64]) -> Self {
        Self {
            obs: ObsModel::new(spec, p, y),
            p: *p,
            q: state_precision(p, y.len()),
        }
    }

    /// `log p(h | theta) + log p(y | h, theta)`.
    pub(crate) fn log_density(&self, h: &[f64]) -> f64 {
        state_log_prior(&self.p, h) + self.obs.value(h)
    }

    pub(crate) fn obs_loglik(&self, h: &[f64]) -> f64 {
        self.obs.value(h)
    }
}

/// Gaussian approximation `N(mode, K^{-1})` of the block `range` of `h`
/// given the rest of the path. `mode` is a full-length path.
pub(crate) struct GaussApprox {
    pub mode: Vec<f64>,
    range: Range<usize>,
    k: Band2,
    chol: BandChol,
    log_det: f64,
}

impl GaussApprox {
    pub(crate) fn log_density(&self, h: &[f64]) -> f64 {
        let r = self.range.clone();
        let d: Vec<f64> = h[r.clone()].iter().zip(&self.mode[r.clone()]).map(|(a, b)| a - b).collect();
        -0.5 * (r.len() as f64 * LN_2PI - self.log_det + self.k.quad(&d))
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let r = self.range.clone();
        let z: Vec<f64> = (0..r.len()).map(|_| rng.sample(StandardNormal)).collect();
        let x = self.chol.solve_upper(&z);
        let mut h = self.mode.clone();
        for (hi, xi) in h[r].iter_mut().zip(&x) {
            *hi += xi;
        }
        h
    }
}

/// Gradient of the log target and its (clamped) negative Hessian on `range`.
fn hessian(t: &Target, h: &[f64], range: Range<usize>) -> (Vec<f64>, Band2) {
    let d = t.obs.derivs(h);
    let mut k = t.q.clone();
    for i in 0..h.len() {
        k.d0[i] += d.nh0[i];
        k.d1[i] += d.nh1[i];
    }
    let x: Vec<f64> = h.iter().map(|v| v - t.p.mu_h).collect();
    let qx = t.q.mul_vec(&x);
    let grad = d.grad[range.clone()].iter().zip(&qx[range.clone()]).map(|(g, q)| g - q).collect();
    (grad, k.sub(range))
}

/// Newton search for the conditional mode of `h[range]` with the rest of
/// `start` held fixed.
pub(crate) fn approximate(t: &Target, start: &[f64], range: Range<usize>) -> Result<GaussApprox> {
    let mut h = start.to_vec();
    let mut f = t.log_density(&h);
    if !f.is_finite() {
        for v in &mut h[range.clone()] {
            *v = t.p.mu_h;
        }
        f = t.log_density(&h);
    }
    for it in 0..MAX_NEWTON {
        let (grad, k) = hessian(t, &h, range.clone());
        let chol = k.cholesky().ok_or(Error::ModeSearchFailure { iterations: it })?;
        let step = chol.solve(&grad);
        let mut lam = 1.0;
        let mut cand = h.clone();
        let mut fc;
        loop {
            for ((c, a), s) in cand[range.clone()].iter_mut().zip(&h[range.clone()]).zip(&step) {
                *c = a + lam * s;
            }
            fc = t.log_density(&cand);
            if fc.is_finite() && fc >= f - 1e-10 * f.abs().max(1.0) {
                break;
            }
            lam *= 0.5;
            if lam < 1e-10 {
                return Err(Error::ModeSearchFailure { iterations: it + 1 });
            }
        }
        let size = step.iter().fold(0.0f64, |m, s| m.max((lam * s).abs()));
        h = cand;
        f = fc;
        if size < 1e-6 {
            let (_, k) = hessian(t, &h, range.clone());
            let chol = k.cholesky().ok_or(Error::ModeSearchFailure { iterations: it + 1 })?;
            let log_det = chol.log_det();
            return Ok(GaussApprox {
                mode: h,
                range,
                k,
                chol,
                log_det,
            });
        }
    }
    Err(Error::ModeSearchFailure { iterations: MAX_NEWTON })
}

/// Contiguous blocks of nearly equal length, none longer than `max_block`.
pub(crate) fn blocks(n: usize, max_block: usize) -> Vec<Range<usize>> {
    let k = n.div_ceil(max_block.max(1)).max(1);
    (0..k).map(|i| (i * n / k)..((i + 1) * n / k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPath {
    pub h: Vec<f64>,
    /// Target `log p(h | theta) + log p(y | h, theta)` at the returned path.
    pub loglik_at_path: f64,
    pub accepted: bool,
}

/// One accept-reject Metropolis-Hastings update given a built approximation.
pub(crate) fn armh_step<R: Rng>(t: &Target, g: &GaussApprox, current: &[f64], rng: &mut R) -> LatentPath {
    let log_c = t.log_density(&g.mode) - g.log_density(&g.mode);
    let excess = |h: &[f64], f: f64| f - g.log_density(h) - log_c;
    let f_cur = t.log_density(current);
    let mut prop = None;
    for _ in 0..MAX_AR_ATTEMPTS {
        let h = g.draw(rng);
        let f = t.log_density(&h);
        let d = excess(&h, f);
        if d >= 0.0 || rng.random::<f64>().ln() < d {
            prop = Some((h, f, d));
            break;
        }
    }
    let Some((h, f, d_prop)) = prop else {
        return LatentPath {
            h: current.to_vec(),
            loglik_at_path: f_cur,
            accepted: false,
        };
    };
    let d_cur = excess(current, f_cur);
    let log_alpha = if !f_cur.is_finite() || d_cur <= 0.0 {
        0.0
    } else if d_prop <= 0.0 {
        -d_cur
    } else {
        (d_prop - d_cur).min(0.0)
    };
    if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
        LatentPath {
            h,
            loglik_at_path: f,
            accepted: true,
        }
    } else {
        LatentPath {
            h: current.to_vec(),
            loglik_at_path: f_cur,
            accepted: false,
        }
    }
}

pub fn sample_states(spec: &ModelSpec, params: &SvParams, y: &[f64], current_h: &[f64], seed: u64) -> Result<LatentPath> {
    params.validate_for_likelihood(spec, y.len())?;
    if current_h.len() != y.len() {
        return Err(Error::InvalidParams("state path length differs from data length".into()));
    }
    let t = Target::new(spec, params, y);
    let mut rng = stream(seed, "sv-states", 0);
    let mut path = LatentPath {
        h: current_h.to_vec(),
        loglik_at_path: t.log_density(current_h),
        accepted: false,
    };
    for r in blocks(y.len(), MAX_BLOCK) {
        let g = approximate(&t, &path.h, r)?;
        let step = armh_step(&t, &g, &path.h, &mut rng);
        path.accepted |= step.accepted;
        path.h = step.h;
        path.loglik_at_path = step.loglik_at_path;
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedLoglik {
    pub value: f64,
    pub nse: f64,
    pub ess: f64,
    pub draws: usize,
}

/// Importance-sampling estimate of `log p(y | theta)` with the path integrated out.
pub fn sv_integrated_loglik(spec: &ModelSpec, params: &SvParams, y: &[f64], n_draws: usize, seed: u64) -> Result<IntegratedLoglik> {
    params.validate_for_likelihood(spec, y.len())?;
    if n_draws < 2 {
        return Err(Error::InvalidParams("importance sampling needs at least two draws".into()));
    }
    let t = Target::new(spec, params, y);
    let start = default_start(params, y);
    let g = approximate(&t, &start, 0..y.len())?;
    let mut rng = stream(seed, "sv-is", 0);
    let lw: Vec<f64> = (0..n_draws)
        .map(|_| {
            let h = g.draw(&mut rng);
            t.log_density(&h) - g.log_density(&h)
        })
        .collect();
    weights_summary(&lw)
}

pub(crate) fn default_start(p: &SvParams, y: &[f64]) -> Vec<f64> {
    vec![p.mu_h; y.len()]
}

/// Log mean weight, delta-method standard error and effective sample size.
pub(crate) fn weights_summary(lw: &[f64]) -> Result<IntegratedLoglik> {
    let n = lw.len();
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::DegenerateWeights { ess: 0.0, draws: n });
    }
    let w: Vec<f64> = lw.iter().map(|v| (v - m).exp()).collect();
    let nf = n as f64;
    let mean = w.iter().sum::<f64>() / nf;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let ess = w.iter().sum::<f64>().powi(2) / w.iter().map(|x| x * x).sum::<f64>();
    if ess < 0.01 * nf {
        return Err(Error::DegenerateWeights { ess, draws: n });
    }
    Ok(IntegratedLoglik {
        value: log_sum_exp(lw) - nf.ln(),
        nse: var.sqrt() / (nf.sqrt() * mean),
        ess,
        draws: n,
    })
}
