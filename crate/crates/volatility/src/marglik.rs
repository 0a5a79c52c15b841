//! Marginal likelihoods by importance sampling from a posterior-fitted
//! Gaussian on the unconstrained scale, Bayes factors and rankings.

use causvol_core::rng::{derive_seed, stream};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::{garch_loglik_with, GarchParams, VarianceInit};
use crate::mcmc::{fingerprint, PosteriorDraws};
use crate::priors::{log_prior, PriorConfig};
use crate::spec::{constrain, unconstrain, Family, ModelSpec, ParamDef};
use crate::sv::states::weights_summary;
use crate::sv::{sv_integrated_loglik, SvParams};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalFamily {
    #[default]
    Independent,
    FullCovariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarglikConfig {
    pub n_is_draws: usize,
    /// Importance draws per likelihood evaluation for SV models.
    pub inner_draws: usize,
    pub seed: u64,
    pub proposal: ProposalFamily,
    /// Multiplies the fitted proposal standard deviations.
    pub scale: f64,
}

impl Default for MarglikConfig {
    fn default() -> Self {
        Self {
            n_is_draws: 5000,
            inner_draws: 100,
            seed: 0,
            proposal: ProposalFamily::Independent,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsEstimate {
    pub log_ml: f64,
    pub nse: f64,
    pub ess: f64,
    pub n_is_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalLikelihoodEstimate {
    pub spec: ModelSpec,
    pub log_ml: f64,
    pub nse: f64,
    pub n_is_draws: usize,
    pub ess: f64,
    pub data_fingerprint: String,
}

struct Proposal {
    mean: Vec<f64>,
    chol: Vec<f64>,
    log_norm: f64,
}

impl Proposal {
    fn fit(u: &[Vec<f64>], family: ProposalFamily, scale: f64) -> Result<Self> {
        let d = u[0].len();
        let n = u.len() as f64;
        let mut mean = vec![0.0; d];
        for r in u {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut c = DMatrix::<f64>::zeros(d, d);
        for r in u {
            for i in 0..d {
                for j in 0..=i {
                    if family == ProposalFamily::FullCovariance || i == j {
                        c[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                c[(j, i)] = c[(i, j)];
            }
        }
        let c = c * (scale * scale);
        let l = c
            .cholesky()
            .ok_or_else(|| Error::InvalidParams("posterior draws have a singular covariance".into()))?
            .l();
        let chol: Vec<f64> = (0..d * d).map(|k| l[(k / d, k % d)]).collect();
        let log_norm = -0.5 * d as f64 * LN_2PI - (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(Self { mean, chol, log_norm })
    }

    /// A draw and its log density.
    fn draw<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, f64) {
        let d = self.mean.len();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let u = (0..d)
            .map(|i| self.mean[i] + (0..=i).map(|j| self.chol[i * d + j] * z[j]).sum::<f64>())
            .collect();
        (u, self.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>())
    }
}

/// Importance-sampling estimate of `log integral p(y | x) p(x) dx` given draws
/// from the posterior of `x` (constrained scale). `log_lik` receives the draw
/// index so nested estimators can derive their own seeds.
pub fn importance_marginal<P, L>(draws: &[Vec<f64>], layout: &[ParamDef], log_prior: P, log_lik: L, cfg: &MarglikConfig) -> Result<IsEstimate>
where
    P: Fn(&[f64]) -> f64,
    L: Fn(&[f64], usize) -> Result<f64>,
{
    if draws.len() < 2 || cfg.n_is_draws < 2 {
        return Err(Error::EmptyFit);
    }
    let u: Vec<Vec<f64>> = draws.iter().map(|x| unconstrain(layout, x)).collect();
    let q = Proposal::fit(&u, cfg.proposal, cfg.scale)?;
    let mut lw = Vec::with_capacity(cfg.n_is_draws);
    for i in 0..cfg.n_is_draws {
        let mut rng = stream(cfg.seed, "marglik", i as u64);
        let (ui, lq) = q.draw(&mut rng);
        let (x, lj) = constrain(layout, &ui);
        let lp = log_prior(&x);
        let w = if lp.is_finite() { log_lik(&x, i)? + lp + lj - lq } else { f64::NEG_INFINITY };
        lw.push(if w.is_nan() { f64::NEG_INFINITY } else { w });
    }
    let s = weights_summary(&lw)?;
    Ok(IsEstimate {
        log_ml: s.value,
        nse: s.nse,
        ess: s.ess,
        n_is_draws: s.draws,
    })
}

fn soft(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::InvalidParams(_)) | Err(Error::NumericalUnderflow(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

pub fn marginal_likelihood(fit: &PosteriorDraws, y: &[f64], prior: &PriorConfig, cfg: &MarglikConfig) -> Result<MarginalLikelihoodEstimate> {
    if fit.n_draws() < 1000 {
        return Err(Error::InvalidParams(format!(
            "marginal likelihood needs at least 1000 posterior draws, got {}",
            fit.n_draws()
        )));
    }
    let fp = fingerprint(y);
    if fp != fit.data_fingerprint {
        return Err(Error::DataMismatch);
    }
    let spec = fit.spec;
    let layout = spec.param_layout();
    let lp = |x: &[f64]| log_prior(&spec, prior, x);
    let est = match spec.family {
        Family::Garch => importance_marginal(
            &fit.draws,
            &layout,
            lp,
            |x, _| soft(GarchParams::from_vec(&spec, x).and_then(|p| garch_loglik_with(&spec, &p, y, VarianceInit::Unconditional))),
            cfg,
        )?,
        Family::Sv => importance_marginal(
            &fit.draws,
            &layout,
            lp,
            |x, i| {
                soft(SvParams::from_vec(&spec, x).and_then(|p| {
                    sv_integrated_loglik(&spec, &p, y, cfg.inner_draws, derive_seed(cfg.seed, "sv-inner", i as u64)).map(|r| r.value)
                }))
            },
            cfg,
        )?,
    };
    Ok(MarginalLikelihoodEstimate {
        spec,
        log_ml: est.log_ml,
        nse: est.nse,
        n_is_draws: est.n_is_draws,
        ess: est.ess,
        data_fingerprint: fp,
    })
}

/// `log p(y | a) - log p(y | b)`.
pub fn bayes_factor(a: &MarginalLikelihoodEstimate, b: &MarginalLikelihoodEstimate) -> Result<f64> {
    if a.data_fingerprint != b.data_fingerprint {
        return Err(Error::DataMismatch);
    }
    Ok(a.log_ml - b.log_ml)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub rank: usize,
    pub estimate: MarginalLikelihoodEstimate,
    /// Log Bayes factor of the best model against this one.
    pub log_bf_from_best: f64,
}

pub fn ranking_table(estimates: &[MarginalLikelihoodEstimate]) -> Result<Vec<RankedModel>> {
    if estimates.len() < 2 {
        return Err(Error::Empty);
    }
    let mut sorted: Vec<&MarginalLikelihoodEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| b.log_ml.total_cmp(&a.log_ml).then_with(|| a.spec.name().cmp(b.spec.name())));
    let best = sorted[0].log_ml;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, e)| RankedModel {
            rank: i + 1,
            estimate: e.clone(),
            log_bf_from_best: best - e.log_ml,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Feature, Support};
    use rand_distr::Normal;

    fn conjugate(n: usize, seed: u64) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
        // y_i ~ N(theta, 1), theta ~ N(0, 1)
        let mut rng = stream(seed, "conjugate-data", 0);
        let y: Vec<f64> = (0..n).map(|_| 0.7 + rng.sample::<f64, _>(StandardNormal)).collect();
        let s: f64 = y.iter().sum();
        let ss: f64 = y.iter().map(|v| v * v).sum();
        let nf = n as f64;
        let exact = -0.5 * nf * LN_2PI - 0.5 * (1.0 + nf).ln() - 0.5 * (ss - s * s / (1.0 + nf));
        let post = Normal::new(s / (1.0 + nf), (1.0 / (1.0 + nf)).sqrt()).unwrap();
        let draws = (0..2000).map(|_| vec![rng.sample(post)]).collect();
        (y, exact, draws)
    }

    fn estimate(y: &[f64], draws: &[Vec<f64>], cfg: &MarglikConfig) -> IsEstimate {
        let layout = [ParamDef::new("theta", Support::Real)];
        importance_marginal(
            draws,
            &layout,
            |x| -0.5 * (LN_2PI + x[0] * x[0]),
            |x, _| Ok(y.iter().map(|v| -0.5 * (LN_2PI + (v - x[0]).powi(2))).sum()),
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn conjugate_gaussian_oracle() {
        let (y, exact, draws) = conjugate(50, 1);
        let est = estimate(&y, &draws, &MarglikConfig::default());
        assert!((est.log_ml - exact).abs() < 0.05f64.max(3.0 * est.nse), "{est:?} {exact}");
        assert_eq!(est, estimate(&y, &draws, &MarglikConfig::default()));
    }

    #[test]
    fn flat_likelihood_matches_prior_average() {
        // a nearly flat likelihood: the estimate should equal E_prior[p(y|theta)]
        let loglik = |t: f64| -0.5 * (t - 0.3) * (t - 0.3) / 400.0 - 2.0;
        let layout = [ParamDef::new("theta", Support::Real)];
        let mut rng = stream(3, "prior", 0);
        let prior_draws: Vec<Vec<f64>> = (0..4000).map(|_| vec![rng.sample(StandardNormal)]).collect();
        let direct: Vec<f64> = prior_draws.iter().map(|d| loglik(d[0])).collect();
        let direct = causvol_core::stats::log_sum_exp(&direct) - (direct.len() as f64).ln();
        let est = importance_marginal(
            &prior_draws,
            &layout,
            |x| -0.5 * (LN_2PI + x[0] * x[0]),
            |x, _| Ok(loglik(x[0])),
            &MarglikConfig::default(),
        )
        .unwrap();
        assert!((est.log_ml - direct).abs() < 1e-3, "{} {direct}", est.log_ml);
    }

    #[test]
    fn bayes_factor_and_ranking() {
        let mk = |f: Feature, v: f64, fp: &str| MarginalLikelihoodEstimate {
            spec: ModelSpec::new(Family::Garch, f),
            log_ml: v,
            nse: 0.1,
            n_is_draws: 10,
            ess: 9.0,
            data_fingerprint: fp.into(),
        };
        let a = mk(Feature::Base, -100.0, "x");
        assert_eq!(bayes_factor(&a, &a).unwrap(), 0.0);
        assert_eq!(bayes_factor(&a, &mk(Feature::Base, -100.0, "y")), Err(Error::DataMismatch));
        let table = ranking_table(&[a.clone(), mk(Feature::StudentT, -90.0, "x"), mk(Feature::Jump, -100.0, "x")]).unwrap();
        let names: Vec<&str> = table.iter().map(|r| r.estimate.spec.name()).collect();
        assert_eq!(names, vec!["GARCH-t", "GARCH", "GARCH-J"]);
        assert_eq!(table[1].log_bf_from_best, 10.0);
        assert_eq!(ranking_table(&[a]), Err(Error::Empty));
    }
}
