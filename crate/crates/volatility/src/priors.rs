//! Proper, normalized priors for every variant.
//!
//! | parameter | prior |
//! |---|---|
//! | mu, lambda, mu_j | N(0, `mean_var`) |
//! | alpha0 | N(1, 10) truncated to (0, inf) |
//! | alpha1, beta1, beta2, gamma | independent normals jointly truncated to the nonnegative covariance-stationary region |
//! | psi, rho | U(-1, 1) |
//! | nu | nu - 2 ~ Gamma(2, rate 0.1) |
//! | kappa | U(0, 0.1) |
//! | sigma_j | Gamma(2, rate 0.5) |
//! | mu_h | N(0, 10) |
//! | phi (AR(1)) | (phi + 1)/2 ~ Beta(20, 1.5) |
//! | phi, phi2 (AR(2)) | uniform on the stationarity triangle |
//! | sigma_h2 | inverse gamma(3, scale 0.2) |

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use causvol_core::rng::stream;
use causvol_core::stats::normal_cdf;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::spec::{Family, Feature, ModelSpec};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub mean_var: f64,
    pub alpha0_mean: f64,
    pub alpha0_var: f64,
    /// `(mean, variance)` for alpha1, beta1, beta2 and gamma.
    pub alpha1: (f64, f64),
    pub beta1: (f64, f64),
    pub beta2: (f64, f64),
    pub gamma: (f64, f64),
    pub nu_shape: f64,
    pub nu_rate: f64,
    pub sigma_j_shape: f64,
    pub sigma_j_rate: f64,
    pub mu_h_var: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub sigma_h2_shape: f64,
    pub sigma_h2_scale: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mean_var: 100.0,
            alpha0_mean: 1.0,
            alpha0_var: 10.0,
            alpha1: (0.1, 1.0),
            beta1: (0.8, 1.0),
            beta2: (0.0, 1.0),
            gamma: (0.0, 1.0),
            nu_shape: 2.0,
            nu_rate: 0.1,
            sigma_j_shape: 2.0,
            sigma_j_rate: 0.5,
            mu_h_var: 10.0,
            phi_a: 20.0,
            phi_b: 1.5,
            sigma_h2_shape: 3.0,
            sigma_h2_scale: 0.2,
        }
    }
}

pub fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean) * (x - mean) / var)
}

fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn ln_inv_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// Nonnegative coefficients with `alpha1 + beta1 + beta2 + gamma/2 < 1`.
pub fn garch_stationary(alpha1: f64, beta1: f64, beta2: f64, gamma: f64) -> bool {
    alpha1 >= 0.0 && beta1 >= 0.0 && beta2 >= 0.0 && gamma >= 0.0 && alpha1 + beta1 + beta2 + 0.5 * gamma < 1.0
}

pub fn ar2_stationary(phi1: f64, phi2: f64) -> bool {
    phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0 && phi2.abs() < 1.0
}

const REGION_DRAWS: u64 = 1_000_000;

type RegionKey = [u64; 6];

fn region_cache() -> &'static Mutex<HashMap<RegionKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<RegionKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Probability that the untruncated normals land in the stationarity region,
/// by a fixed-seed Monte Carlo with 10^6 draws (cached).
fn region_mass(means: [f64; 3], vars: [f64; 3], third: Option<Feature>) -> f64 {
    let tag = match third {
        None => 0u64,
        Some(Feature::TwoLags) => 1,
        Some(_) => 2,
    };
    let key = [
        means[0].to_bits() ^ vars[0].to_bits().rotate_left(7),
        means[1].to_bits() ^ vars[1].to_bits().rotate_left(7),
        means[2].to_bits() ^ vars[2].to_bits().rotate_left(7),
        tag,
        vars[0].to_bits(),
        vars[1].to_bits() ^ vars[2].to_bits().rotate_left(3),
    ];
    if let Some(v) = region_cache().lock().expect("prior cache").get(&key) {
        return *v;
    }
    let mut rng = stream(0x5eed, "garch-prior-region", tag);
    let sd = vars.map(f64::sqrt);
    let mut hit = 0u64;
    for _ in 0..REGION_DRAWS {
        let a: f64 = means[0] + sd[0] * rng.sample::<f64, _>(StandardNormal);
        let b: f64 = means[1] + sd[1] * rng.sample::<f64, _>(StandardNormal);
        let c: f64 = if tag == 0 {
            0.0
        } else {
            means[2] + sd[2] * rng.sample::<f64, _>(StandardNormal)
        };
        let ok = match tag {
            0 => garch_stationary(a, b, 0.0, 0.0),
            1 => garch_stationary(a, b, c, 0.0),
            _ => garch_stationary(a, b, 0.0, c),
        };
        hit += ok as u64;
    }
    let p = hit as f64 / REGION_DRAWS as f64;
    region_cache().lock().expect("prior cache").insert(key, p);
    p
}

/// Log prior density of a parameter vector laid out as `spec.param_layout()`.
/// Returns `-inf` outside the support.
pub fn log_prior(spec: &ModelSpec, cfg: &PriorConfig, theta: &[f64]) -> f64 {
    let layout = spec.param_layout();
    let get = |name: &str| layout.iter().position(|p| p.name == name).map(|i| theta[i]);
    for (p, &x) in layout.iter().zip(theta) {
        if !p.support.contains(x) {
            return f64::NEG_INFINITY;
        }
    }
    let mut lp = ln_normal(get("mu").unwrap_or(0.0), 0.0, cfg.mean_var);
    match spec.family {
        Family::Garch => {
            let a0 = get("alpha0").expect("alpha0");
            lp += ln_normal(a0, cfg.alpha0_mean, cfg.alpha0_var) - normal_cdf(cfg.alpha0_mean / cfg.alpha0_var.sqrt()).ln();
            let a1 = get("alpha1").expect("alpha1");
            let b1 = get("beta1").expect("beta1");
            let b2 = get("beta2").unwrap_or(0.0);
            let g = get("gamma").unwrap_or(0.0);
            if !garch_stationary(a1, b1, b2, g) {
                return f64::NEG_INFINITY;
            }
            lp += ln_normal(a1, cfg.alpha1.0, cfg.alpha1.1) + ln_normal(b1, cfg.beta1.0, cfg.beta1.1);
            let (third, m3, v3) = match spec.feature {
                Feature::TwoLags => {
                    lp += ln_normal(b2, cfg.beta2.0, cfg.beta2.1);
                    (Some(Feature::TwoLags), cfg.beta2.0, cfg.beta2.1)
                }
                Feature::Leverage => {
                    lp += ln_normal(g, cfg.gamma.0, cfg.gamma.1);
                    (Some(Feature::Leverage), cfg.gamma.0, cfg.gamma.1)
                }
                _ => (None, 0.0, 1.0),
            };
            lp -= region_mass(
                [cfg.alpha1.0, cfg.beta1.0, m3],
                [cfg.alpha1.1, cfg.beta1.1, v3],
                third,
            )
            .ln();
        }
        Family::Sv => {
            lp += ln_normal(get("mu_h").expect("mu_h"), 0.0, cfg.mu_h_var);
            let phi = get("phi").expect("phi");
            if spec.feature == Feature::TwoLags {
                let phi2 = get("phi2").expect("phi2");
                if !ar2_stationary(phi, phi2) {
                    return f64::NEG_INFINITY;
                }
                lp += -(4.0f64).ln();
            } else {
                let u = (phi + 1.0) / 2.0;
                lp += (cfg.phi_a - 1.0) * u.ln() + (cfg.phi_b - 1.0) * (1.0 - u).ln() - ln_beta(cfg.phi_a, cfg.phi_b) - 2f64.ln();
            }
            lp += ln_inv_gamma_pdf(get("sigma_h2").expect("sigma_h2"), cfg.sigma_h2_shape, cfg.sigma_h2_scale);
            if get("rho").is_some() {
                lp += -(2.0f64).ln();
            }
        }
    }
    match spec.feature {
        Feature::Jump => {
            lp += (10.0f64).ln();
            lp += ln_normal(get("mu_j").expect("mu_j"), 0.0, cfg.mean_var);
            lp += ln_gamma_pdf(get("sigma_j").expect("sigma_j"), cfg.sigma_j_shape, cfg.sigma_j_rate);
        }
        Feature::InMean => lp += ln_normal(get("lambda").expect("lambda"), 0.0, cfg.mean_var),
        Feature::Ma1 => lp += -(2.0f64).ln(),
        Feature::StudentT => lp += ln_gamma_pdf(get("nu").expect("nu") - 2.0, cfg.nu_shape, cfg.nu_rate),
        _ => {}
    }
    lp
}
