//! Unit-root and BDS batteries.

use causvol_core::bds::{bds_on_var_residuals, bds_test, BdsDimension, EpsRule};
use causvol_core::unit_root::{
    adf_test, perron_break_test_with, pp_test, Bandwidth, Deterministic, InfoCriterion, PerronConfig,
    UnitRootResult,
};
use causvol_core::var::{select_lag, VarCriterion};
use causvol_core::Series;

use super::{targets, Context, StageOutput};
use crate::config::Criterion;
use crate::data::align;
use crate::report::{stars, Cell, Column, Kind, Table};

pub const UNIT_ROOT: &str = "unit_root";
pub const BDS: &str = "bds";

fn starred(r: &UnitRootResult) -> Cell {
    Cell::Starred {
        value: r.statistic,
        stars: r.stars(),
        lag: Some(r.lag_or_bandwidth),
    }
}

pub fn unit_root(ctx: &Context) -> StageOutput {
    let mut out = StageOutput::default();
    let Some(cfg) = ctx.config.unit_root.as_ref() else {
        return out;
    };
    let criterion = match cfg.criterion {
        Criterion::Aic => InfoCriterion::Aic,
        Criterion::Sic => InfoCriterion::Sic,
    };
    let bw = cfg.pp_bandwidth.map_or(Bandwidth::NeweyWestAuto, Bandwidth::Fixed);
    let perron = PerronConfig {
        max_lag: cfg.perron_max_lag,
        trim: cfg.perron_trim,
        ..PerronConfig::default()
    };
    let mut series: Vec<(String, Series)> = ctx.data.causes.iter().map(|c| (c.name().to_string(), c.clone())).collect();
    series.extend(targets(ctx, UNIT_ROOT, cfg.volatility, &mut out).into_iter().map(|t| (t.label(), t.series)));

    let mut t = Table::new(
        "unit_root",
        "Unit root tests",
        vec![
            Column::new("series", Kind::Text),
            Column::new("ADF C", Kind::Starred),
            Column::new("ADF C+T", Kind::Starred),
            Column::new("PP C", Kind::Starred),
            Column::new("PP C+T", Kind::Starred),
            Column::new("Perron C+T", Kind::Starred),
            Column::new("break date", Kind::Text),
        ],
    );
    for (label, s) in &series {
        let mut row = vec![Cell::Text(label.clone())];
        let mut run = |r: causvol_core::Result<UnitRootResult>| match r {
            Ok(r) => (starred(&r), r.break_date),
            Err(e) => {
                out.fail(UNIT_ROOT, format!("{label}: {e}"));
                (Cell::Empty, None)
            }
        };
        for det in [Deterministic::Constant, Deterministic::ConstantTrend] {
            row.push(run(adf_test(s, det, cfg.adf_max_lag, criterion)).0);
        }
        for det in [Deterministic::Constant, Deterministic::ConstantTrend] {
            row.push(run(pp_test(s, det, bw)).0);
        }
        let (cell, date) = run(perron_break_test_with(s, &perron));
        row.push(cell);
        row.push(date.map_or(Cell::Empty, |d| Cell::Text(d.label())));
        t.push(row);
    }
    t.note("Lag order (ADF, Perron) or bandwidth (PP) in parentheses.");
    t.note("Stars mark rejection of a unit root at 10% (*), 5% (**) and 1% (***).");
    out.tables.push(t);
    out
}

fn bds_cells(dims: &[BdsDimension], max_m: usize) -> Vec<Cell> {
    (2..=max_m)
        .map(|m| match dims.iter().find(|d| d.m == m) {
            Some(d) => Cell::Starred {
                value: d.statistic,
                stars: stars(d.p_value),
                lag: None,
            },
            None => Cell::Empty,
        })
        .collect()
}

pub fn bds(ctx: &Context) -> StageOutput {
    let mut out = StageOutput::default();
    let Some(cfg) = ctx.config.bds.as_ref() else {
        return out;
    };
    let eps = EpsRule::TimesStd(cfg.eps_std);
    let dims = 2..=cfg.max_dimension;
    let mut columns = vec![Column::new("panel", Kind::Text), Column::new("series", Kind::Text)];
    columns.extend(dims.clone().map(|m| Column::new(format!("m={m}"), Kind::Num)));
    let mut t = Table::new("bds", "BDS test", columns);

    let tg = targets(ctx, BDS, cfg.volatility, &mut out);
    let raw: Vec<(String, &Series)> = tg
        .iter()
        .map(|t| (t.label(), &t.series))
        .chain(ctx.data.causes.iter().map(|c| (c.name().to_string(), c)))
        .collect();
    for (label, s) in raw {
        match bds_test(s, dims.clone(), eps) {
            Ok(r) => {
                let mut row = vec![Cell::Text("series".into()), Cell::Text(label)];
                row.extend(bds_cells(&r.per_dimension, cfg.max_dimension));
                t.push(row);
            }
            Err(e) => out.fail(BDS, format!("{label}: {e}")),
        }
    }
    for cause in &ctx.data.causes {
        for target in &tg {
            let label = format!("{} ~ {}", target.label(), cause.name());
            let res = align(cause, &target.series).map_err(|e| e.to_string()).and_then(|(c, y)| {
                let system = [c, y];
                let lag = match cfg.var_lag {
                    Some(l) => l,
                    None => select_lag(&system, cfg.var_max_lag, VarCriterion::Aic).map_err(|e| e.to_string())?,
                };
                let r = bds_on_var_residuals(&system, lag, dims.clone(), eps).map_err(|e| e.to_string())?;
                Ok((lag, r))
            });
            match res {
                Ok((lag, r)) => {
                    let (_, dims) = &r[1];
                    let mut row = vec![Cell::Text(format!("VAR({lag}) residual")), Cell::Text(label)];
                    row.extend(bds_cells(&dims.per_dimension, cfg.max_dimension));
                    t.push(row);
                }
                Err(e) => out.fail(BDS, format!("{label}: {e}")),
            }
        }
    }
    t.note(format!("Embedding dimension m; epsilon = {} standard deviations.", cfg.eps_std));
    t.note("Stars mark rejection of iid at 10% (*), 5% (**) and 1% (***).");
    out.tables.push(t);
    out
}
