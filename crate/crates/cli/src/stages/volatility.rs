//! Bayesian volatility models: fits, marginal likelihoods, ranking and the
//! extracted volatility series of the source model.

use std::collections::BTreeMap;

use causvol_core::Series;
use causvol_volatility::garch::{garch_filter, VarianceInit};
use causvol_volatility::marglik::RankedModel;
use causvol_volatility::mcmc::gelman_rubin;
use causvol_volatility::{
    extract_volatility, fit_bayes, marginal_likelihood, persist, ranking_table, Family, GarchParams,
    MarginalLikelihoodEstimate, MarglikConfig, McmcConfig, ModelSpec, PosteriorDraws,
};

use super::{Context, SeedRegistry, StageOutput};
use crate::config::VolatilityConfig;
use crate::report::{Cell, Column, Kind, Table};

pub const STAGE: &str = "volatility";

/// Posterior standard deviation path for the fitted model.
pub fn volatility_path(fit: &PosteriorDraws, y: &Series) -> Result<Series, String> {
    match fit.spec.family {
        Family::Sv => extract_volatility(fit).map_err(|e| e.to_string()),
        Family::Garch => {
            let theta = fit.posterior_mean();
            let p = GarchParams::from_vec(&fit.spec, &theta).map_err(|e| e.to_string())?;
            let (s2, _) = garch_filter(&fit.spec, &p, y.values(), VarianceInit::Unconditional).map_err(|e| e.to_string())?;
            y.with_values(format!("{}_vol", y.name()), s2.into_iter().map(f64::sqrt).collect())
                .map_err(|e| e.to_string())
        }
    }
}

struct Fitted {
    estimate: MarginalLikelihoodEstimate,
    min_acceptance: f64,
    max_rhat: Option<f64>,
}

fn fit_model(
    ctx: &Context,
    cfg: &VolatilityConfig,
    spec: ModelSpec,
    y: &Series,
    seeds: &mut SeedRegistry,
    out: &mut StageOutput,
) -> Result<(Fitted, PosteriorDraws), String> {
    let c = y.name();
    let m = spec.name();
    let mut chains = Vec::with_capacity(cfg.chains);
    for k in 0..cfg.chains.max(1) {
        let mcmc = McmcConfig {
            burn_in: cfg.burn_in,
            draws: cfg.draws,
            seed: seeds.seed(&format!("volatility/{c}/{m}/chain{k}")),
            thin_paths: cfg.thin_paths,
        };
        chains.push(fit_bayes(&spec, y, &cfg.priors, &mcmc).map_err(|e| format!("{m} chain {k}: {e}"))?);
    }
    let max_rhat = if chains.len() > 1 {
        let refs: Vec<&PosteriorDraws> = chains.iter().collect();
        let r = gelman_rubin(&refs).map_err(|e| e.to_string())?;
        Some(r.into_iter().fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    let fit = chains.swap_remove(0);
    let ml = MarglikConfig {
        n_is_draws: cfg.is_draws,
        inner_draws: cfg.inner_draws,
        seed: seeds.seed(&format!("marglik/{c}/{m}")),
        proposal: cfg.proposal,
        scale: 1.0,
    };
    let estimate = marginal_likelihood(&fit, y.values(), &cfg.priors, &ml).map_err(|e| format!("{m}: {e}"))?;
    if cfg.save_draws {
        let dir = ctx.output_dir.join("draws");
        match persist::write_draws(&fit, &cfg.priors, &dir, &format!("{c}_{m}")) {
            Ok(p) => out.written.extend(p),
            Err(e) => out.fail(STAGE, format!("{c} {m}: {e}")),
        }
    }
    let min_acceptance = fit.acceptance_rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        Fitted {
            estimate,
            min_acceptance,
            max_rhat,
        },
        fit,
    ))
}

/// Runs the stage and returns the extracted volatility per commodity.
pub fn run(ctx: &Context, seeds: &mut SeedRegistry) -> (StageOutput, BTreeMap<String, Series>) {
    let mut out = StageOutput::default();
    let mut vols = BTreeMap::new();
    let Some(cfg) = ctx.config.volatility.as_ref() else {
        return (out, vols);
    };
    let names: Vec<&str> = ctx.data.returns.iter().map(|s| s.name()).collect();
    let mut fitted: BTreeMap<(String, ModelSpec), Fitted> = BTreeMap::new();
    let mut rankings: Vec<(String, Vec<RankedModel>)> = Vec::new();

    for y in &ctx.data.returns {
        let c = y.name().to_string();
        let mut estimates = Vec::new();
        for &spec in &cfg.models {
            match fit_model(ctx, cfg, spec, y, seeds, &mut out) {
                Ok((f, fit)) => {
                    if spec == cfg.source {
                        match volatility_path(&fit, y) {
                            Ok(v) => {
                                vols.insert(c.clone(), v);
                            }
                            Err(e) => out.fail(STAGE, format!("{c} {}: {e}", spec.name())),
                        }
                    }
                    estimates.push(f.estimate.clone());
                    fitted.insert((c.clone(), spec), f);
                }
                Err(e) => out.fail(STAGE, format!("{c}: {e}")),
            }
        }
        if estimates.len() >= 2 {
            match ranking_table(&estimates) {
                Ok(r) => rankings.push((c, r)),
                Err(e) => out.fail(STAGE, format!("{c}: {e}")),
            }
        }
    }

    let mut columns = vec![Column::new("model", Kind::Text)];
    columns.extend(names.iter().map(|n| Column::new(*n, Kind::Estimate)));
    let mut t = Table::new("marginal_likelihood", "Log marginal likelihoods", columns);
    for &spec in &cfg.models {
        let mut r = vec![Cell::Text(spec.name().into())];
        for n in &names {
            r.push(match fitted.get(&(n.to_string(), spec)) {
                Some(f) => Cell::Estimate {
                    value: f.estimate.log_ml,
                    se: f.estimate.nse,
                },
                None => Cell::Empty,
            });
        }
        t.push(r);
    }
    t.note("Importance-sampling estimates; numerical standard errors alongside.");
    out.tables.push(t);

    let mut t = Table::new(
        "model_ranking",
        "Model ranking by marginal likelihood",
        vec![
            Column::new("series", Kind::Text),
            Column::new("rank", Kind::Int),
            Column::new("model", Kind::Text),
            Column::new("log ML", Kind::Num),
            Column::new("log BF vs best", Kind::Num),
        ],
    );
    for (c, ranked) in &rankings {
        for r in ranked {
            t.push(vec![
                Cell::Text(c.clone()),
                Cell::Int(r.rank as i64),
                Cell::Text(r.estimate.spec.name().into()),
                Cell::Num(r.estimate.log_ml),
                Cell::Num(r.log_bf_from_best),
            ]);
        }
    }
    out.tables.push(t);

    let mut t = Table::new(
        "volatility_diagnostics",
        "Sampler diagnostics",
        vec![
            Column::new("series", Kind::Text),
            Column::new("model", Kind::Text),
            Column::new("min acceptance", Kind::Num),
            Column::new("max R-hat", Kind::Num),
            Column::new("IS ESS", Kind::Num),
        ],
    );
    for ((c, spec), f) in &fitted {
        t.push(vec![
            Cell::Text(c.clone()),
            Cell::Text(spec.name().into()),
            Cell::Num(f.min_acceptance),
            f.max_rhat.map_or(Cell::Empty, Cell::Num),
            Cell::Num(f.estimate.ess),
        ]);
    }
    out.tables.push(t);

    if !vols.is_empty() {
        out.files.push(("volatility_series.csv".into(), series_csv(&vols)));
    }
    (out, vols)
}

/// Long format: `series,date,volatility`.
pub fn series_csv(vols: &BTreeMap<String, Series>) -> String {
    let mut s = String::from("series,date,volatility\n");
    for (c, v) in vols {
        for (p, x) in v.timestamps().zip(v.values()) {
            s.push_str(&format!("{c},{p},{x}\n"));
        }
    }
    s
}
