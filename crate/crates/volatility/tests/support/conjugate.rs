//! `y_i ~ N(theta, 1)`, `theta ~ N(0, 1)`: closed-form evidence and exact
//! posterior draws.

use causvol_core::rng::stream;
use causvol_volatility::marglik::{importance_marginal, IsEstimate, MarglikConfig};
use causvol_volatility::spec::{ParamDef, Support};
use rand::Rng;
use rand_distr::{Normal, StandardNormal};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub struct Conjugate {
    pub y: Vec<f64>,
    pub log_evidence: f64,
    pub draws: Vec<Vec<f64>>,
}

pub fn conjugate(n: usize, n_draws: usize, seed: u64) -> Conjugate {
    let mut rng = stream(seed, "conjugate", 0);
    let y: Vec<f64> = (0..n).map(|_| 0.7 + rng.sample::<f64, _>(StandardNormal)).collect();
    let s: f64 = y.iter().sum();
    let ss: f64 = y.iter().map(|v| v * v).sum();
    let nf = n as f64;
    let log_evidence = -0.5 * nf * LN_2PI - 0.5 * (1.0 + nf).ln() - 0.5 * (ss - s * s / (1.0 + nf));
    let post = Normal::new(s / (1.0 + nf), (1.0 / (1.0 + nf)).sqrt()).unwrap();
    let draws = (0..n_draws).map(|_| vec![rng.sample(post)]).collect();
    Conjugate { y, log_evidence, draws }
}

pub fn estimate(c: &Conjugate, cfg: &MarglikConfig) -> IsEstimate {
    let layout = [ParamDef::new("theta", Support::Real)];
    importance_marginal(
        &c.draws,
        &layout,
        |x| -0.5 * (LN_2PI + x[0] * x[0]),
        |x, _| Ok(c.y.iter().map(|v| -0.5 * (LN_2PI + (v - x[0]).powi(2))).sum()),
        cfg,
    )
    .unwrap()
}
