//! Linear, nonparametric and quantile Granger-causality batteries.

use causvol_core::nonparam::{self, dp_test, hj_test};
use causvol_core::quantile::{augmented_qar, causality_table, AugmentedConfig, QuantileGrid, SubsamplingConfig};
use causvol_core::var::{fit_var, select_lag, VarCriterion};
use causvol_core::Series;

use super::{targets, Context, Panel, SeedRegistry, StageOutput, Target};
use crate::config::{DpBandwidth, GridChoice};
use crate::data::align;
use crate::report::{Cell, Column, Kind, Table};

pub const GRANGER: &str = "granger";
pub const NONPARAM: &str = "nonparam";
pub const QUANTILE: &str = "quantile";

fn aligned(cause: &Series, target: &Target) -> Result<(Series, Series), String> {
    align(cause, &target.series).map_err(|e| e.to_string())
}

pub fn granger(ctx: &Context) -> StageOutput {
    let mut out = StageOutput::default();
    let Some(cfg) = ctx.config.granger.as_ref() else {
        return out;
    };
    let mut t = Table::new(
        "linear_granger",
        "Linear Granger causality",
        vec![
            Column::new("Null hypothesis", Kind::Text),
            Column::new("Lag", Kind::Int),
            Column::new("Chi-sq", Kind::Num),
            Column::new("P-value", Kind::P),
            Column::new("Causality", Kind::Text),
        ],
    );
    for target in targets(ctx, GRANGER, cfg.volatility, &mut out) {
        for cause in &ctx.data.causes {
            let res = aligned(cause, &target).and_then(|(c, y)| {
                let system = [c, y];
                let lag = match cfg.lag {
                    Some(l) => l,
                    None => select_lag(&system, cfg.max_lag, VarCriterion::Aic).map_err(|e| e.to_string())?,
                };
                let model = fit_var(&system, lag).map_err(|e| e.to_string())?;
                let (cn, yn) = (system[0].name(), system[1].name());
                let fwd = causvol_core::var::granger_wald(&model, cn, yn).map_err(|e| e.to_string())?;
                let back = causvol_core::var::granger_wald(&model, yn, cn).map_err(|e| e.to_string())?;
                Ok([fwd, back])
            });
            match res {
                Ok([fwd, back]) => {
                    let names = [(cause.name().to_string(), target.label()), (target.label(), cause.name().to_string())];
                    for (r, (from, to)) in [fwd, back].into_iter().zip(names) {
                        t.push(vec![
                            Cell::Text(format!("{from} does not Granger cause {to}")),
                            Cell::Int(r.lag as i64),
                            Cell::Num(r.chi_sq),
                            Cell::P(r.p_value),
                            Cell::Text(if r.decision { "Yes" } else { "No" }.into()),
                        ]);
                    }
                }
                Err(e) => out.fail(GRANGER, format!("{} and {}: {e}", cause.name(), target.label())),
            }
        }
    }
    t.note("Wald tests in a bivariate VAR; lag chosen by AIC unless fixed.");
    out.tables.push(t);
    out
}

pub fn nonparam(ctx: &Context) -> StageOutput {
    let mut out = StageOutput::default();
    let Some(cfg) = ctx.config.nonparam.as_ref() else {
        return out;
    };
    let dp_bw = match cfg.dp_bandwidth {
        DpBandwidth::Fixed => nonparam::Bandwidth::Fixed(cfg.bandwidth),
        DpBandwidth::Auto => nonparam::Bandwidth::Auto,
    };
    let mut t = Table::new(
        "nonparametric_granger",
        "Nonparametric Granger causality",
        vec![
            Column::new("Null hypothesis", Kind::Text),
            Column::new("Lag", Kind::Int),
            Column::new("H&J", Kind::WithP),
            Column::new("D&P", Kind::WithP),
        ],
    );
    for target in targets(ctx, NONPARAM, cfg.volatility, &mut out) {
        for cause in &ctx.data.causes {
            let (c, y) = match aligned(cause, &target) {
                Ok(p) => p,
                Err(e) => {
                    out.fail(NONPARAM, format!("{} and {}: {e}", cause.name(), target.label()));
                    continue;
                }
            };
            let null = format!("{} does not Granger cause {}", cause.name(), target.label());
            for lag in 1..=cfg.max_lag {
                let cell = |r: causvol_core::Result<nonparam::NonparamCausalityResult>, out: &mut StageOutput, test: &str| match r {
                    Ok(r) => Cell::WithP {
                        value: r.statistic,
                        p: r.p_value,
                    },
                    Err(e) => {
                        out.fail(NONPARAM, format!("{test} {null} at lag {lag}: {e}"));
                        Cell::Empty
                    }
                };
                let hj = cell(hj_test(&c, &y, lag, cfg.bandwidth), &mut out, "H&J");
                let dp = cell(dp_test(&c, &y, lag, dp_bw), &mut out, "D&P");
                if hj != Cell::Empty || dp != Cell::Empty {
                    t.push(vec![Cell::Text(null.clone()), Cell::Int(lag as i64), hj, dp]);
                }
            }
        }
    }
    t.note("Statistics with one-sided p-values in parentheses; series standardized.");
    out.tables.push(t);
    out
}

fn grid(choice: GridChoice) -> (QuantileGrid, &'static str) {
    match choice {
        GridChoice::Deciles => (QuantileGrid::deciles(), "deciles"),
        GridChoice::Vigintiles => (QuantileGrid::vigintiles(), "vigintiles"),
    }
}

pub fn quantile(ctx: &Context, seeds: &mut SeedRegistry) -> StageOutput {
    let mut out = StageOutput::default();
    let Some(cfg) = ctx.config.quantile.as_ref() else {
        return out;
    };
    let tg = targets(ctx, QUANTILE, cfg.volatility, &mut out);
    for cause in &ctx.data.causes {
        for &choice in &cfg.grids {
            let (g, gname) = grid(choice);
            for panel in [Panel::Returns, Panel::Volatility] {
                let panel_targets: Vec<&Target> = tg.iter().filter(|t| t.panel == panel).collect();
                if panel_targets.is_empty() {
                    continue;
                }
                let mut columns = vec![Column::new("series", Kind::Text), Column::new("Lag", Kind::Int)];
                columns.push(Column::new(g.label(), Kind::P));
                columns.extend(g.levels().iter().map(|l| Column::new(format!("{l}"), Kind::P)));
                let mut t = Table::new(
                    format!("quantile_{}_{}_{}", panel.label(), cause.name(), gname),
                    format!("Causality in quantiles from {} to {}", cause.name(), panel.label()),
                    columns,
                );
                for target in panel_targets {
                    let sub = SubsamplingConfig {
                        k: cfg.k,
                        seed: seeds.seed(&format!("quantile/{}/{}/{gname}", cause.name(), target.label())),
                    };
                    let res = aligned(cause, target).and_then(|(c, y)| {
                        causality_table(&y, &c, &cfg.orders, &g, &sub).map_err(|e| e.to_string())
                    });
                    match res {
                        Ok(r) => {
                            for row in r.rows {
                                let mut cells = vec![
                                    Cell::Text(target.commodity.clone()),
                                    Cell::Int(row.order as i64),
                                    Cell::P(row.joint.outcome.p_value),
                                ];
                                cells.extend(row.per_tau.iter().map(|c| Cell::P(c.outcome.p_value)));
                                t.push(cells);
                            }
                        }
                        Err(e) => out.fail(QUANTILE, format!("{} to {}: {e}", cause.name(), target.label())),
                    }
                }
                t.note("Subsampling p-values; bold entries reject non-causality at 10%.");
                out.tables.push(t);
            }
        }
        if cfg.augmented {
            for target in &tg {
                let acfg = AugmentedConfig {
                    replicates: cfg.augmented_replicates,
                    seed: seeds.seed(&format!("augmented/{}/{}", cause.name(), target.label())),
                    ..AugmentedConfig::default()
                };
                let (g, _) = grid(cfg.grids.first().copied().unwrap_or(GridChoice::Deciles));
                let res = aligned(cause, target)
                    .and_then(|(c, y)| augmented_qar(&y, &c, &g, &acfg).map_err(|e| e.to_string()));
                match res {
                    Ok(a) => {
                        let mut s = String::from("tau,beta,std_error,lower,upper\n");
                        for b in &a.bands {
                            s.push_str(&format!(
                                "{},{},{},{},{}\n",
                                b.tau,
                                crate::report::sig6(b.beta),
                                crate::report::sig6(b.std_error),
                                crate::report::sig6(b.lower),
                                crate::report::sig6(b.upper)
                            ));
                        }
                        let name = format!(
                            "augmented_qar_{}_{}_{}.csv",
                            cause.name(),
                            target.commodity,
                            target.panel.label()
                        );
                        out.files.push((name, s));
                    }
                    Err(e) => out.fail(QUANTILE, format!("augmented {} to {}: {e}", cause.name(), target.label())),
                }
            }
        }
    }
    out
}
