//! Descriptive statistics and rank correlations.

use causvol_core::series::{describe, spearman};

use super::{Context, StageOutput};
use crate::data::align;
use crate::report::{stars, Cell, Column, Kind, Table};

pub const STAGE: &str = "summary";

pub fn run(ctx: &Context) -> StageOutput {
    let mut out = StageOutput::default();
    let series: Vec<_> = ctx.data.returns.iter().chain(&ctx.data.causes).collect();
    let mut columns = vec![Column::new("", Kind::Text)];
    let mut stats = Vec::new();
    for s in &series {
        match describe(s) {
            Ok(d) => {
                columns.push(Column::new(s.name(), Kind::Num));
                stats.push(d);
            }
            Err(e) => out.fail(STAGE, format!("{}: {e}", s.name())),
        }
    }
    let mut t = Table::new("summary", "Summary statistics", columns);
    type Get = fn(&causvol_core::series::SummaryStats) -> f64;
    let rows: [(&str, Get); 7] = [
        ("Mean", |d| d.mean),
        ("Median", |d| d.median),
        ("Maximum", |d| d.max),
        ("Minimum", |d| d.min),
        ("Std. Dev.", |d| d.std_dev),
        ("Skewness", |d| d.skewness),
        ("Kurtosis", |d| d.kurtosis),
    ];
        for (name, get) in rows {
        let mut r = vec![Cell::Text(name.into())];
        r.extend(stats.iter().map(|d| Cell::Num(get(d))));
        t.push(r);
    }
    let mut r = vec![Cell::Text("Jarque-Bera".into())];
    r.extend(stats.iter().map(|d| Cell::Starred {
        value: d.jarque_bera_stat,
        stars: stars(d.jarque_bera_p),
        lag: None,
    }));
    t.push(r);
    let mut r = vec![Cell::Text("Observations".into())];
    r.extend(stats.iter().map(|d| Cell::Int(d.n as i64)));
    t.push(r);
    t.note("Returns are percent log changes. Kurtosis is not in excess form.");
    t.note("Stars mark rejection of normality by Jarque-Bera at 10% (*), 5% (**) and 1% (***).");
    out.tables.push(t);

    if !ctx.data.prices.is_empty() {
        let mut columns = vec![Column::new("variable", Kind::Text)];
        columns.extend(ctx.data.prices.iter().map(|p| Column::new(format!("{} price", p.name()), Kind::Num)));
        let mut t = Table::new("rank_correlation", "Spearman rank correlations with price levels", columns);
        for c in &ctx.data.causes {
            let mut r = vec![Cell::Text(c.name().into())];
            for p in &ctx.data.prices {
                match align(c, p).and_then(|(a, b)| spearman(&a, &b)) {
                    Ok(v) => r.push(Cell::Num(v)),
                    Err(e) => {
                        out.fail(STAGE, format!("{} vs {}: {e}", c.name(), p.name()));
                        r.push(Cell::Empty);
                    }
                }
            }
            t.push(r);
        }
        t.note("Prices are deflated levels when a price index is configured.");
        out.tables.push(t);
    }
    out
}
