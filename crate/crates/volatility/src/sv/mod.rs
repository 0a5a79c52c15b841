//! Stochastic-volatility family.
//!
//! `y_t = mu + e^{h_t/2} eps_t` with `h_t - mu_h` a stationary AR(1), or AR(2)
//! for SV-2, driven by `N(0, sigma_h2)` shocks. Variants:
//!
//! * SV-J: `eps_t` mixed with a `N(mu_j, sigma_j^2)` jump arriving with probability `kappa`;
//! * SV-M: `lambda h_t` added to the mean;
//! * SV-MA: `y_t = mu + u_t + psi u_{t-1}` with `u_t = e^{h_t/2} eps_t`;
//! * SV-t: `eps_t` standardized Student-t;
//! * SV-L: `corr(eps_t, eta_t) = rho` where `eta_t` moves `h_t` to `h_{t+1}`.
//!
//! Jumps and t scale mixtures are integrated out of the observation density
//! rather than sampled.

pub mod banded;
mod obs;
pub mod states;

use causvol_core::rng::stream;
use causvol_core::series::Series;
use causvol_core::stats::{mean, variance};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{check_divergence, constant_guard, fingerprint, McmcConfig, PosteriorDraws, Rwm};
use crate::priors::{ar2_stationary, log_prior, PriorConfig};
use crate::spec::{Family, Feature, ModelSpec, ParamDef};
use states::{approximate, armh_step, blocks, state_log_prior, state_precision, stationary_moments, Target};

pub use states::{sample_states, sv_integrated_loglik, IntegratedLoglik, LatentPath};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub mu: f64,
    pub mu_h: f64,
    pub phi: f64,
    pub phi2: f64,
    /// Variance of the log-variance shocks.
    pub sigma_h2: f64,
    pub rho: f64,
    pub psi: f64,
    pub nu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub mu_j: f64,
    pub sigma_j: f64,
}

impl SvParams {
    pub fn new(mu: f64, mu_h: f64, phi: f64, sigma_h2: f64) -> Self {
        Self {
            mu,
            mu_h,
            phi,
            phi2: 0.0,
            sigma_h2,
            rho: 0.0,
            psi: 0.0,
            nu: f64::INFINITY,
            lambda: 0.0,
            kappa: 0.0,
            mu_j: 0.0,
            sigma_j: 1.0,
        }
    }

    fn field_mut(&mut self, name: &str) -> &mut f64 {
        match name {
            "mu" => &mut self.mu,
            "mu_h" => &mut self.mu_h,
            "phi" => &mut self.phi,
            "phi2" => &mut self.phi2,
            "sigma_h2" => &mut self.sigma_h2,
            "rho" => &mut self.rho,
            "psi" => &mut self.psi,
            "nu" => &mut self.nu,
            "lambda" => &mut self.lambda,
            "kappa" => &mut self.kappa,
            "mu_j" => &mut self.mu_j,
            "sigma_j" => &mut self.sigma_j,
            other => unreachable!("no SV parameter {other}"),
        }
    }

    pub fn from_vec(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        check_family(spec)?;
        let names = spec.param_names();
        if v.len() != names.len() {
            return Err(Error::InvalidParams(format!(
                "{} expects {} parameters, got {}",
                spec,
                names.len(),
                v.len()
            )));
        }
        let mut p = Self::new(0.0, 0.0, 0.0, 0.0);
        for (n, &x) in names.iter().zip(v) {
            *p.field_mut(n) = x;
        }
        Ok(p)
    }

    pub fn to_vec(&self, spec: &ModelSpec) -> Vec<f64> {
        let mut c = *self;
        spec.param_names().iter().map(|n| *c.field_mut(n)).collect()
    }

    /// Copy with every parameter outside the spec's layout switched off.
    pub fn active(&self, spec: &ModelSpec) -> Self {
        let mut src = *self;
        let mut p = Self::new(self.mu, self.mu_h, self.phi, self.sigma_h2);
        for n in spec.param_names() {
            *p.field_mut(n) = *src.field_mut(n);
        }
        p
    }

    /// Admits `sigma_h2 = 0`, which only simulation accepts.
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        check_family(spec)?;
        let p = self.active(spec);
        let bad = |m: &str| Err(Error::InvalidParams(format!("{spec}: {m}")));
        if !(p.mu.is_finite() && p.mu_h.is_finite() && p.lambda.is_finite() && p.mu_j.is_finite()) {
            return bad("location parameters must be finite");
        }
        if !ar2_stationary(p.phi, p.phi2) {
            return bad("log-variance autoregression must be stationary");
        }
        if !(p.sigma_h2 >= 0.0 && p.sigma_h2.is_finite()) {
            return bad("sigma_h2 must be nonnegative");
        }
        if !(p.rho.abs() < 1.0 && p.psi.abs() < 1.0) {
            return bad("rho and psi must lie in (-1, 1)");
        }
        if !(p.nu > 2.0) {
            return bad("nu must exceed 2");
        }
        if !(0.0..1.0).contains(&p.kappa) || !(p.sigma_j > 0.0) {
            return bad("jump intensity must lie in [0, 1) and jump scale be positive");
        }
        Ok(())
    }

    pub(crate) fn validate_for_likelihood(&self, spec: &ModelSpec, n: usize) -> Result<()> {
        self.validate(spec)?;
        if !(self.sigma_h2 > 0.0) {
            return Err(Error::InvalidParams(format!("{spec}: sigma_h2 must be positive")));
        }
        if n < 2 {
            return Err(Error::TooShort {
                op: "stochastic volatility likelihood",
                need: 2,
                got: n,
            });
        }
        Ok(())
    }
}

fn check_family(spec: &ModelSpec) -> Result<()> {
    if spec.family != Family::Sv {
        return Err(Error::InvalidParams(format!("{spec} is not an SV variant")));
    }
    Ok(())
}

pub fn simulate_sv(spec: &ModelSpec, params: &SvParams, n: usize, seed: u64) -> Result<Series> {
    Ok(simulate_sv_with_states(spec, params, n, seed)?.0)
}

/// Simulated returns together with the log-variance path that generated them.
pub fn simulate_sv_with_states(spec: &ModelSpec, params: &SvParams, n: usize, seed: u64) -> Result<(Series, Vec<f64>)> {
    params.validate(spec)?;
    if n < 2 {
        return Err(Error::TooShort {
            op: "simulate_sv",
            need: 2,
            got: n,
        });
    }
    let p = params.active(spec);
    let mut state_rng = stream(seed, "sv-state", 0);
    let mut obs_rng = stream(seed, "sv-obs", 0);
    let mut jump_rng = stream(seed, "sv-jump", 0);
    let mut t_rng = stream(seed, "sv-t", 0);
    let chi = if spec.has(Feature::StudentT) {
        Some(ChiSquared::new(p.nu).map_err(|e| Error::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let sig = p.sigma_h2.sqrt();
    let (g0, g1) = stationary_moments(p.phi, p.phi2, p.sigma_h2);
    let mut x = Vec::with_capacity(n);
    x.push(g0.sqrt() * state_rng.sample::<f64, _>(StandardNormal));
    let mut y = Vec::with_capacity(n);
    let mut prev_u = 0.0;
    for t in 0..n {
        let h = p.mu_h + x[t];
        let z_eps: f64 = obs_rng.sample(StandardNormal);
        let eps = match &chi {
            Some(c) => z_eps / (c.sample(&mut t_rng) / p.nu).sqrt() * ((p.nu - 2.0) / p.nu).sqrt(),
            None => z_eps,
        };
        let mut u = (0.5 * h).exp() * eps;
        if spec.has(Feature::Jump) {
            let a: f64 = jump_rng.random();
            let size: f64 = jump_rng.sample(StandardNormal);
            if a < p.kappa {
                u += p.mu_j + p.sigma_j * size;
            }
        }
        y.push(p.mu + p.lambda * h + u + p.psi * prev_u);
        prev_u = u;
        if t + 1 < n {
            let z_eta: f64 = state_rng.sample(StandardNormal);
            let shock = p.rho * z_eps + (1.0 - p.rho * p.rho).sqrt() * z_eta;
            let next = if t == 0 && spec.has(Feature::TwoLags) {
                let ratio = if g0 > 0.0 { g1 / g0 } else { 0.0 };
                ratio * x[0] + (g0 - ratio * g1).max(0.0).sqrt() * shock
            } else {
                let lag2 = if t >= 1 { x[t - 1] } else { 0.0 };
                p.phi * x[t] + p.phi2 * lag2 + sig * shock
            };
            x.push(next);
        }
    }
    let h: Vec<f64> = x.iter().map(|v| p.mu_h + v).collect();
    Ok((Series::from_values(spec.name(), y)?, h))
}

fn start_values(spec: &ModelSpec, y: &[f64]) -> SvParams {
    let (m, v) = (mean(y), variance(y));
    let mut p = SvParams::new(m, v.ln(), 0.9, 0.05);
    match spec.feature {
        Feature::TwoLags => {
            p.phi = 0.8;
            p.phi2 = 0.1;
        }
        Feature::StudentT => p.nu = 10.0,
        Feature::Jump => {
            p.kappa = 0.05;
            p.sigma_j = v.sqrt();
        }
        _ => {}
    }
    p
}

/// Which parameters the Gibbs sampler updates in closed form.
fn conjugate_block(spec: &ModelSpec) -> bool {
    !spec.has(Feature::Leverage)
}

fn rwm_indices(spec: &ModelSpec) -> Vec<usize> {
    let conj = conjugate_block(spec);
    spec.param_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| !(conj && (**n == "mu_h" || **n == "sigma_h2")))
        .map(|(i, _)| i)
        .collect()
}

fn draw_mu_h<R: Rng>(p: &mut SvParams, h: &[f64], prior: &PriorConfig, rng: &mut R) {
    let q = state_precision(p, h.len());
    let ones = vec![1.0; h.len()];
    let q1 = q.mul_vec(&ones);
    let prec = q1.iter().sum::<f64>() + 1.0 / prior.mu_h_var;
    let m = q1.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / prec;
    p.mu_h = m + rng.sample::<f64, _>(StandardNormal) / prec.sqrt();
}

fn draw_sigma_h2<R: Rng>(p: &mut SvParams, h: &[f64], prior: &PriorConfig, rng: &mut R) {
    let unit = SvParams { sigma_h2: 1.0, ..*p };
    let x: Vec<f64> = h.iter().map(|v| v - p.mu_h).collect();
    let ss = state_precision(&unit, h.len()).quad(&x);
    let shape = prior.sigma_h2_shape + 0.5 * h.len() as f64;
    let rate = prior.sigma_h2_scale + 0.5 * ss;
    let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma");
    p.sigma_h2 = 1.0 / g.sample(rng);
}

fn sub_layout(layout: &[ParamDef], idx: &[usize]) -> Vec<ParamDef> {
    idx.iter().map(|&i| layout[i]).collect()
}

pub fn fit_sv_bayes(spec: &ModelSpec, y: &Series, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    check_family(spec)?;
    let yv = y.values();
    let n = yv.len();
    if n < 100 {
        return Err(Error::TooShort {
            op: "fit_sv_bayes",
            need: 100,
            got: n,
        });
    }
    if mcmc.draws < 1000 {
        return Err(Error::InvalidParams("at least 1000 retained draws are required".into()));
    }
    constant_guard(yv)?;
    let layout = spec.param_layout();
    let idx = rwm_indices(spec);
    let sub = sub_layout(&layout, &idx);
    let conj = conjugate_block(spec);

    let mut p = start_values(spec, yv);
    let mut theta = p.to_vec(spec);
    let mut h = vec![p.mu_h; n];
    let steps: Vec<f64> = idx
        .iter()
        .map(|&i| match layout[i].name {
            "mu" => 2.0 * variance(yv).sqrt() / (n as f64).sqrt(),
            "mu_j" => 0.5 * variance(yv).sqrt(),
            "lambda" => 0.02,
            _ => 0.1,
        })
        .collect();
    let mut rwm = Rwm::new(idx.len(), &steps);
    let mut rng = stream(mcmc.seed, "sv-gibbs", 0);

    let block_target = |u: &[f64], theta: &[f64], h: &[f64]| -> f64 {
        let mut full = theta.to_vec();
        let mut lj = 0.0;
        for (k, &i) in idx.iter().enumerate() {
            full[i] = sub[k].support.to_constrained(u[k]);
            lj += sub[k].support.log_jacobian(u[k]);
        }
        let lp = log_prior(spec, prior, &full);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let Ok(q) = SvParams::from_vec(spec, &full) else {
            return f64::NEG_INFINITY;
        };
        let t = Target::new(spec, &q, yv);
        let v = state_log_prior(&q, h) + t.obs_loglik(h);
        if v.is_finite() {
            v + lp + lj
        } else {
            f64::NEG_INFINITY
        }
    };

    let total = mcmc.burn_in + mcmc.draws;
    let thin = mcmc.thin_paths.max(1);
    let mut draws = Vec::with_capacity(mcmc.draws);
    let mut paths = Vec::new();
    let mut vol_sum = vec![0.0; n];
    let mut state_accepts = 0usize;
    let state_blocks = blocks(n, states::MAX_BLOCK);
    for it in 0..total {
        let burning = it < mcmc.burn_in;
        let target = Target::new(spec, &p, yv);
        for r in &state_blocks {
            let g = approximate(&target, &h, r.clone())?;
            let step = armh_step(&target, &g, &h, &mut rng);
            h = step.h;
            if !burning && step.accepted {
                state_accepts += 1;
            }
        }
        if conj {
            draw_mu_h(&mut p, &h, prior, &mut rng);
            draw_sigma_h2(&mut p, &h, prior, &mut rng);
            theta = p.to_vec(spec);
        }
        let mut u: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| sub[k].support.to_unconstrained(theta[i])).collect();
        let mut lp = block_target(&u, &theta, &h);
        rwm.step(&mut u, &mut lp, |v| block_target(v, &theta, &h), &mut rng, burning);
        for (k, &i) in idx.iter().enumerate() {
            theta[i] = sub[k].support.to_constrained(u[k]);
        }
        p = SvParams::from_vec(spec, &theta)?;
        if !burning {
            draws.push(theta.clone());
            for (s, v) in vol_sum.iter_mut().zip(&h) {
                *s += (0.5 * v).exp();
            }
            let k = it - mcmc.burn_in;
            if k % thin == 0 {
                paths.push(h.clone());
            }
        }
    }
    let state_rate = state_accepts as f64 / (mcmc.draws * state_blocks.len()) as f64;
    let param_rate = rwm.acceptance_rate();
    check_divergence("state", state_rate)?;
    check_divergence(spec.name(), param_rate)?;
    let vol: Vec<f64> = vol_sum.iter().map(|s| s / mcmc.draws as f64).collect();
    Ok(PosteriorDraws {
        spec: *spec,
        param_names: spec.param_names().iter().map(|s| s.to_string()).collect(),
        draws,
        blocks: vec!["states".into(), "parameters".into()],
        acceptance_rates: vec![state_rate, param_rate],
        seed: mcmc.seed,
        data_fingerprint: fingerprint(yv),
        paths,
        volatility: Some(y.with_values(format!("{}_vol", y.name()), vol)?),
    })
}

/// Posterior mean of `exp(h_t / 2)`, the conditional standard deviation.
pub fn extract_volatility(fit: &PosteriorDraws) -> Result<Series> {
    if fit.draws.is_empty() {
        return Err(Error::EmptyFit);
    }
    fit.volatility.clone().ok_or(Error::EmptyFit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use causvol_core::stats::log_sum_exp;

    fn spec(f: Feature) -> ModelSpec {
        ModelSpec::new(Family::Sv, f)
    }

    /// log of the integral of exp(f) over a cube grid around the mode, plus the
    /// grid-integrated AR acceptance probability.
    fn quadrature(t: &Target, g: &states::GaussApprox, half: f64, m: usize) -> (f64, f64) {
        let step = 2.0 * half / m as f64;
        let vol = step.powi(3).ln();
        let log_c = t.log_density(&g.mode) - g.log_density(&g.mode);
        let mut vals = Vec::with_capacity(m * m * m);
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let h = [
                        g.mode[0] - half + (i as f64 + 0.5) * step,
                        g.mode[1] - half + (j as f64 + 0.5) * step,
                        g.mode[2] - half + (k as f64 + 0.5) * step,
                    ];
                    let f = t.log_density(&h);
                    vals.push(f + vol);
                    acc += (f - log_c).min(g.log_density(&h)).exp() * step.powi(3);
                }
            }
        }
        (log_sum_exp(&vals), acc)
    }

    #[test]
    fn three_observation_case_matches_quadrature() {
        let s = spec(Feature::Base);
        let p = SvParams::new(0.0, -0.5, 0.6, 0.3);
        let y = [0.9, -0.2, 1.6];
        let t = Target::new(&s, &p, &y);
        let g = approximate(&t, &[0.0; 3], 0..3).unwrap();
        let (log_int, acc) = quadrature(&t, &g, 4.5, 90);
        let is = sv_integrated_loglik(&s, &p, &y, 200_000, 5).unwrap();
        assert!((is.value - log_int).abs() < 2.0 * is.nse + 1e-4, "{} {} {}", is.value, log_int, is.nse);
        // empirical AR acceptance against the quadrature value
        let mut rng = stream(6, "test", 0);
        let log_c = t.log_density(&g.mode) - g.log_density(&g.mode);
        let trials = 200_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let h = g.draw(&mut rng);
            let d = t.log_density(&h) - g.log_density(&h) - log_c;
            if d >= 0.0 || rng.random::<f64>().ln() < d {
                hits += 1;
            }
        }
        // the AR step accepts with probability integral(min(f / c, g)) / 1
        assert_relative_eq!(hits as f64 / trials as f64, acc, max_relative = 0.01);
    }

    #[test]
    fn tiny_state_noise_collapses_to_constant_path() {
        let s = spec(Feature::Base);
        let p = SvParams::new(0.1, -0.7, 0.9, 1e-8);
        let y = simulate_sv(&s, &p, 300, 2).unwrap();
        let start: Vec<f64> = (0..300).map(|t| p.mu_h + 1e-3 * (t as f64).sin()).collect();
        let path = sample_states(&s, &p, y.values(), &start, 3).unwrap();
        assert!(path.accepted);
        let dev = path.h.iter().fold(0.0f64, |m, v| m.max((v - p.mu_h).abs()));
        assert!(dev < 1e-3, "{dev}");
        let closed: f64 = y
            .values()
            .iter()
            .map(|v| -0.5 * ((2.0 * std::f64::consts::PI).ln() + p.mu_h + (v - p.mu).powi(2) * (-p.mu_h).exp()))
            .sum();
        let is = sv_integrated_loglik(&s, &p, y.values(), 200, 1).unwrap();
        assert!((is.value - closed).abs() < 1e-3, "{} {}", is.value, closed);
    }

    #[test]
    fn state_draws_are_deterministic() {
        let s = spec(Feature::StudentT);
        let p = SvParams { nu: 8.0, ..SvParams::new(0.0, -1.0, 0.95, 0.04) };
        let y = simulate_sv(&s, &p, 200, 8).unwrap();
        let a = sample_states(&s, &p, y.values(), &vec![-1.0; 200], 11).unwrap();
        let b = sample_states(&s, &p, y.values(), &vec![-1.0; 200], 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_state_noise_gives_homoskedastic_series() {
        let p = SvParams::new(0.0, 0.4, 0.9, 0.0);
        let y = simulate_sv(&spec(Feature::Base), &p, 100_000, 4).unwrap();
        assert!((variance(y.values()) / 0.4f64.exp() - 1.0).abs() < 0.05);
    }

    #[test]
    fn switched_off_features_match_plain_sv() {
        let base = SvParams::new(0.1, -0.5, 0.9, 0.05);
        let a = simulate_sv(&spec(Feature::Base), &base, 400, 21).unwrap();
        for (f, p) in [
            (Feature::Jump, SvParams { kappa: 0.0, ..base }),
            (Feature::Leverage, SvParams { rho: 0.0, ..base }),
            (Feature::Ma1, SvParams { psi: 0.0, ..base }),
            (Feature::InMean, SvParams { lambda: 0.0, ..base }),
        ] {
            let b = simulate_sv(&spec(f), &p, 400, 21).unwrap();
            assert_eq!(a.values(), b.values(), "{f:?}");
            let h = vec![-0.4; 400];
            let la = Target::new(&spec(Feature::Base), &base, a.values()).log_density(&h);
            let lb = Target::new(&spec(f), &p, a.values()).log_density(&h);
            assert_eq!(la, lb, "{f:?}");
        }
    }

    #[test]
    fn leverage_signature_in_simulation() {
        let s = spec(Feature::Leverage);
        let p = SvParams { rho: -0.8, ..SvParams::new(0.0, -1.0, 0.95, 0.04) };
        let (y, h) = simulate_sv_with_states(&s, &p, 100_000, 5).unwrap();
        let dh: Vec<f64> = h.windows(2).map(|w| w[1] - w[0]).collect();
        let c = causvol_core::series::pearson(&y.values()[..dh.len()], &dh);
        assert!(c < 0.0, "{c}");
    }

    #[test]
    fn constant_series_is_flagged() {
        let y = Series::from_values("c", vec![0.0; 150]).unwrap();
        let r = fit_sv_bayes(&spec(Feature::Base), &y, &PriorConfig::default(), &McmcConfig::default());
        assert!(matches!(r, Err(Error::ChainDivergence(_))));
        let empty = PosteriorDraws {
            spec: spec(Feature::Base),
            param_names: vec![],
            draws: vec![],
            blocks: vec![],
            acceptance_rates: vec![],
            seed: 0,
            data_fingerprint: String::new(),
            paths: vec![],
            volatility: None,
        };
        assert_eq!(extract_volatility(&empty), Err(Error::EmptyFit));
    }

    #[test]
    fn state_precision_inverts_stationary_covariance() {
        let p = SvParams { phi2: -0.3, ..SvParams::new(0.0, 0.0, 0.5, 0.7) };
        let n = 6;
        let q = state_precision(&p, n);
        // autocovariances of the AR(2) by recursion
        let (g0, g1) = stationary_moments(0.5, -0.3, 0.7);
        let mut g = vec![g0, g1];
        for k in 2..n {
            g.push(0.5 * g[k - 1] - 0.3 * g[k - 2]);
        }
        for i in 0..n {
            let col: Vec<f64> = (0..n).map(|j| g[(i as isize - j as isize).unsigned_abs()]).collect();
            let qc = q.mul_vec(&col);
            for (j, v) in qc.iter().enumerate() {
                assert_relative_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
    }
}
