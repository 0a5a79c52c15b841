//! GARCH family: likelihood, forward simulation and posterior sampling.
//!
//! The conditional variance follows
//! `s2_t = alpha0 + (alpha1 + gamma 1{e_{t-1} < 0}) e_{t-1}^2 + beta1 s2_{t-1} + beta2 s2_{t-2}`
//! started at the unconditional variance. Student-t errors are standardized to
//! unit variance so `s2_t` is always the conditional variance of the
//! innovation. The jump variant mixes `N(0, s2_t)` with `N(mu_j, s2_t + sigma_j^2)`
//! and feeds `e_t = y_t - mu` back into the recursion.

use causvol_core::rng::stream;
use causvol_core::series::Series;
use causvol_core::stats::{mean, variance};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mcmc::{check_divergence, constant_guard, fingerprint, McmcConfig, PosteriorDraws, Rwm};
use crate::priors::{garch_stationary, log_prior, PriorConfig};
use crate::spec::{constrain, unconstrain, Family, Feature, ModelSpec};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub mu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub psi: f64,
    pub nu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub mu_j: f64,
    pub sigma_j: f64,
}

impl GarchParams {
    /// GARCH(1,1) values; every feature parameter at its switched-off value.
    pub fn new(mu: f64, alpha0: f64, alpha1: f64, beta1: f64) -> Self {
        Self {
            mu,
            alpha0,
            alpha1,
            beta1,
            beta2: 0.0,
            gamma: 0.0,
            psi: 0.0,
            nu: f64::INFINITY,
            lambda: 0.0,
            kappa: 0.0,
            mu_j: 0.0,
            sigma_j: 1.0,
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

    fn field_mut(&mut self, name: &str) -> &mut f64 {
        match name {
            "mu" => &mut self.mu,
            "alpha0" => &mut self.alpha0,
            "alpha1" => &mut self.alpha1,
            "beta1" => &mut self.beta1,
            "beta2" => &mut self.beta2,
            "gamma" => &mut self.gamma,
            "psi" => &mut self.psi,
            "nu" => &mut self.nu,
            "lambda" => &mut self.lambda,
            "kappa" => &mut self.kappa,
            "mu_j" => &mut self.mu_j,
            "sigma_j" => &mut self.sigma_j,
            other => unreachable!("no GARCH parameter {other}"),
        }
    }

    fn active(&self, spec: &ModelSpec) -> Self {
        let mut src = *self;
        let mut p = Self::new(self.mu, self.alpha0, self.alpha1, self.beta1);
        for n in spec.param_names() {
            *p.field_mut(n) = *src.field_mut(n);
        }
        p
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1 + self.beta2 + 0.5 * self.gamma
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        check_family(spec)?;
        let p = self.active(spec);
        let bad = |m: &str| Err(Error::InvalidParams(format!("{spec}: {m}")));
        if !p.mu.is_finite() || !p.lambda.is_finite() || !p.mu_j.is_finite() {
            return bad("mean parameters must be finite");
        }
        if !(p.alpha0 > 0.0) {
            return bad("alpha0 must be positive");
        }
        if !garch_stationary(p.alpha1, p.beta1, p.beta2, p.gamma) {
            return bad("variance parameters must be nonnegative and covariance stationary");
        }
        if !(p.psi > -1.0 && p.psi < 1.0) {
            return bad("psi must lie in (-1, 1)");
        }
        if !(p.nu > 2.0) {
            return bad("nu must exceed 2");
        }
        if !(0.0..1.0).contains(&p.kappa) || !(p.sigma_j > 0.0) {
            return bad("jump intensity must lie in [0, 1) and jump scale be positive");
        }
        Ok(())
    }
}

fn check_family(spec: &ModelSpec) -> Result<()> {
    if spec.family != Family::Garch {
        return Err(Error::InvalidParams(format!("{spec} is not a GARCH variant")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceInit {
    #[default]
    Unconditional,
    SampleVariance,
}

/// Conditional variances and innovations implied by the data.
pub fn garch_filter(spec: &ModelSpec, params: &GarchParams, y: &[f64], init: VarianceInit) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate(spec)?;
    let p = params.active(spec);
    let s0 = match init {
        VarianceInit::Unconditional => p.unconditional_variance(),
        VarianceInit::SampleVariance => variance(y),
    };
    let n = y.len();
    let mut s2 = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for t in 0..n {
        let v = if t == 0 {
            s0
        } else {
            let ep = e[t - 1];
            let lev = if ep < 0.0 { p.gamma } else { 0.0 };
            let lag2 = if t >= 2 { s2[t - 2] } else { s0 };
            p.alpha0 + (p.alpha1 + lev) * ep * ep + p.beta1 * s2[t - 1] + p.beta2 * lag2
        };
        let prev_e = if t == 0 { 0.0 } else { e[t - 1] };
        s2.push(v);
        e.push(y[t] - p.mu - p.lambda * v - p.psi * prev_e);
    }
    Ok((s2, e))
}

fn t_const(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
}

pub fn garch_loglik(spec: &ModelSpec, params: &GarchParams, y: &Series) -> Result<f64> {
    garch_loglik_with(spec, params, y.values(), VarianceInit::Unconditional)
}

pub fn garch_loglik_with(spec: &ModelSpec, params: &GarchParams, y: &[f64], init: VarianceInit) -> Result<f64> {
    let (s2, e) = garch_filter(spec, params, y, init)?;
    let p = params.active(spec);
    let student = spec.has(Feature::StudentT);
    let jump = spec.has(Feature::Jump) && p.kappa > 0.0;
    let tc = if student { t_const(p.nu) } else { 0.0 };
    let mut ll = 0.0;
    for (&v, &et) in s2.iter().zip(&e) {
        let term = if student {
            tc - 0.5 * v.ln() - 0.5 * (p.nu + 1.0) * (et * et / ((p.nu - 2.0) * v)).ln_1p()
        } else if jump {
            let a = (1.0 - p.kappa).ln() - 0.5 * (LN_2PI + v.ln() + et * et / v);
            let w = v + p.sigma_j * p.sigma_j;
            let d = et - p.mu_j;
            let b = p.kappa.ln() - 0.5 * (LN_2PI + w.ln() + d * d / w);
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln()
        } else {
            -0.5 * (LN_2PI + v.ln() + et * et / v)
        };
        if !term.is_finite() {
            return Err(Error::NumericalUnderflow(format!("{spec} observation density")));
        }
        ll += term;
    }
    Ok(ll)
}

pub fn simulate_garch(spec: &ModelSpec, params: &GarchParams, n: usize, seed: u64) -> Result<Series> {
    params.validate(spec)?;
    if n == 0 {
        return Err(Error::TooShort {
            op: "simulate_garch",
            need: 1,
            got: 0,
        });
    }
    let p = params.active(spec);
    let mut eps_rng = stream(seed, "garch-eps", 0);
    let mut jump_rng = stream(seed, "garch-jump", 0);
    let mut t_rng = stream(seed, "garch-t", 0);
    let chi = if spec.has(Feature::StudentT) {
        Some(ChiSquared::new(p.nu).map_err(|e| Error::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let s0 = p.unconditional_variance();
    let mut s2: Vec<f64> = Vec::with_capacity(n);
    let mut e: Vec<f64> = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let v = if t == 0 {
            s0
        } else {
            let ep = e[t - 1];
            let lev = if ep < 0.0 { p.gamma } else { 0.0 };
            let lag2 = if t >= 2 { s2[t - 2] } else { s0 };
            p.alpha0 + (p.alpha1 + lev) * ep * ep + p.beta1 * s2[t - 1] + p.beta2 * lag2
        };
        let z: f64 = eps_rng.sample(StandardNormal);
        let z = match &chi {
            Some(c) => z / (c.sample(&mut t_rng) / p.nu).sqrt() * ((p.nu - 2.0) / p.nu).sqrt(),
            None => z,
        };
        let mut et = v.sqrt() * z;
        if spec.has(Feature::Jump) {
            let u: f64 = jump_rng.random();
            let size: f64 = jump_rng.sample(StandardNormal);
            if u < p.kappa {
                et += p.mu_j + p.sigma_j * size;
            }
        }
        let prev_e = if t == 0 { 0.0 } else { e[t - 1] };
        y.push(p.mu + p.lambda * v + et + p.psi * prev_e);
        s2.push(v);
        e.push(et);
    }
    Ok(Series::from_values(spec.name(), y)?)
}

fn start_values(spec: &ModelSpec, y: &[f64]) -> GarchParams {
    let (m, v) = (mean(y), variance(y));
    let mut p = GarchParams::new(m, 0.1 * v, 0.1, 0.8);
    match spec.feature {
        Feature::TwoLags => {
            p.beta1 = 0.7;
            p.beta2 = 0.1;
        }
        Feature::Leverage => {
            p.alpha1 = 0.05;
            p.gamma = 0.1;
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

pub(crate) fn initial_steps(spec: &ModelSpec, y: &[f64]) -> Vec<f64> {
    let sd = variance(y).sqrt();
    let n = y.len() as f64;
    spec.param_names()
        .iter()
        .map(|&name| match name {
            "mu" => 2.0 * sd / n.sqrt(),
            "mu_j" => 0.5 * sd,
            "lambda" => 0.05 / sd.max(1e-8),
            "mu_h" => 0.1,
            _ => 0.1,
        })
        .collect()
}

pub fn fit_garch_bayes(spec: &ModelSpec, y: &Series, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    check_family(spec)?;
    let yv = y.values();
    if yv.len() < 100 {
        return Err(Error::TooShort {
            op: "fit_garch_bayes",
            need: 100,
            got: yv.len(),
        });
    }
    if mcmc.draws < 1000 {
        return Err(Error::InvalidParams("at least 1000 retained draws are required".into()));
    }
    constant_guard(yv)?;
    let layout = spec.param_layout();
    let target = |u: &[f64]| -> f64 {
        let (x, lj) = constrain(&layout, u);
        let lp = log_prior(spec, prior, &x);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let Ok(p) = GarchParams::from_vec(spec, &x) else {
            return f64::NEG_INFINITY;
        };
        match garch_loglik_with(spec, &p, yv, VarianceInit::Unconditional) {
            Ok(ll) => ll + lp + lj,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let start = start_values(spec, yv);
    let mut u = unconstrain(&layout, &start.to_vec(spec));
    let mut lp = target(&u);
    if !lp.is_finite() {
        return Err(Error::ChainDivergence(format!("{spec}: start point has zero posterior density")));
    }
    let mut rwm = Rwm::new(u.len(), &initial_steps(spec, yv));
    let mut rng = stream(mcmc.seed, "garch-rwm", 0);
    for _ in 0..mcmc.burn_in {
        rwm.step(&mut u, &mut lp, target, &mut rng, true);
    }
    let mut draws = Vec::with_capacity(mcmc.draws);
    for _ in 0..mcmc.draws {
        rwm.step(&mut u, &mut lp, target, &mut rng, false);
        draws.push(constrain(&layout, &u).0);
    }
    let rate = rwm.acceptance_rate();
    check_divergence(spec.name(), rate)?;
    Ok(PosteriorDraws {
        spec: *spec,
        param_names: spec.param_names().iter().map(|s| s.to_string()).collect(),
        draws,
        blocks: vec!["parameters".into()],
        acceptance_rates: vec![rate],
        seed: mcmc.seed,
        data_fingerprint: fingerprint(yv),
        paths: Vec::new(),
        volatility: None,
    })
}
