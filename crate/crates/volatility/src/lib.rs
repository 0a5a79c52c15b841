//! GARCH and stochastic-volatility models for monthly returns: likelihoods,
//! simulators, Bayesian samplers and marginal-likelihood comparison.

pub mod error;
pub mod garch;
pub mod marglik;
pub mod mcmc;
pub mod persist;
pub mod priors;
pub mod spec;
pub mod sv;

pub use error::{Error, Result};
pub use garch::{fit_garch_bayes, garch_loglik, simulate_garch, GarchParams};
pub use marglik::{bayes_factor, marginal_likelihood, ranking_table, MarginalLikelihoodEstimate, MarglikConfig};
pub use mcmc::{McmcConfig, PosteriorDraws};
pub use priors::PriorConfig;
pub use spec::{Family, Feature, ModelSpec};
pub use sv::{extract_volatility, fit_sv_bayes, sample_states, simulate_sv, sv_integrated_loglik, SvParams};

use causvol_core::series::Series;

/// Fits any of the fourteen variants.
pub fn fit_bayes(spec: &ModelSpec, y: &Series, prior: &PriorConfig, mcmc: &McmcConfig) -> Result<PosteriorDraws> {
    match spec.family {
        Family::Garch => fit_garch_bayes(spec, y, prior, mcmc),
        Family::Sv => fit_sv_bayes(spec, y, prior, mcmc),
    }
}
