//! Ingestion and the transforms feeding every stage: deflated prices,
//! percent log returns and (optionally logged) causal variables.

use std::collections::BTreeMap;

use causvol_core::series::{deflate, load_csv, log_returns, CsvSchema};
use causvol_core::{Error as CoreError, Series};

use crate::config::LoadedConfig;
use crate::error::{ConfigError, StageError};

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Real (or raw, when no index is configured) price levels by commodity.
    pub prices: Vec<Series>,
    /// Percent returns by commodity, named after the commodity.
    pub returns: Vec<Series>,
    /// Causal variables after the optional log transform.
    pub causes: Vec<Series>,
    /// Volatility series given in the input file, by commodity.
    pub supplied_volatility: BTreeMap<String, Series>,
}

const CPI: &str = "__cpi";

fn schema(lc: &LoadedConfig) -> CsvSchema {
    let d = &lc.config.data;
    let mut s = CsvSchema::new(d.date_column.clone());
    if let Some(c) = &d.cpi {
        s = s.column(c.clone(), CPI);
    }
    for c in &d.commodities {
        s = s.column(c.column.clone(), c.name());
    }
    for c in &d.causes {
        s = s.column(c.column.clone(), c.name());
    }
    for v in &d.volatility {
        s = s.column(v.column.clone(), format!("{}_vol", v.commodity));
    }
    s
}

/// Stage that owns a referenced column, for error messages.
fn owner(lc: &LoadedConfig, column: &str) -> &'static str {
    if lc.config.data.volatility.iter().any(|v| v.column == column) {
        "volatility"
    } else {
        "data"
    }
}

/// Reads the input file; a column the config names but the file lacks is a
/// config error.
pub fn read(lc: &LoadedConfig) -> Result<BTreeMap<String, Series>, ReadError> {
    let path = lc.data_path();
    match load_csv(&path, &schema(lc)) {
        Ok(all) => Ok(all.into_iter().map(|s| (s.name().to_string(), s)).collect()),
        Err(CoreError::MissingColumn { path, column }) => Err(ReadError::Config(ConfigError::MissingColumn {
            stage: owner(lc, &column).to_string(),
            column,
            path,
        })),
        Err(CoreError::Io { path, message }) => Err(ReadError::Config(ConfigError::Read { path, message })),
        Err(e) => Err(ReadError::Stage(StageError::new("data", e))),
    }
}

#[derive(Debug)]
pub enum ReadError {
    Config(ConfigError),
    Stage(StageError),
}

pub fn build(lc: &LoadedConfig, mut raw: BTreeMap<String, Series>) -> Result<Dataset, StageError> {
    let err = |e: CoreError| StageError::new("data", e);
    let d = &lc.config.data;
    let cpi = raw.remove(CPI);
    let mut prices = Vec::new();
    let mut returns = Vec::new();
    for c in &d.commodities {
        let s = raw.remove(c.name()).expect("loaded column");
        if c.returns {
            returns.push(s);
            continue;
        }
        let level = match &cpi {
            Some(cpi) => deflate(&s, cpi).map_err(err)?.renamed(c.name()),
            None => s,
        };
        returns.push(log_returns(&level).map_err(err)?.renamed(c.name()));
        prices.push(level);
    }
    let mut causes = Vec::new();
    for c in &d.causes {
        let s = raw.remove(c.name()).expect("loaded column");
        causes.push(if c.log { s.ln().map_err(err)?.renamed(c.name()) } else { s });
    }
    let supplied_volatility = d
        .volatility
        .iter()
        .map(|v| {
            let key = format!("{}_vol", v.commodity);
            let s = raw.remove(&key).expect("loaded column");
            (v.commodity.clone(), s)
        })
        .collect();
    Ok(Dataset {
        prices,
        returns,
        causes,
        supplied_volatility,
    })
}

/// Both series restricted to their common months.
pub fn align(a: &Series, b: &Series) -> Result<(Series, Series), CoreError> {
    let start = a.start().max(b.start());
    let end = a.end().min(b.end());
    if end < start {
        return Err(CoreError::TimestampMismatch {
            left: format!("{}..{}", a.start(), a.end()),
            right: format!("{}..{}", b.start(), b.end()),
        });
    }
    let len = (end.ordinal() - start.ordinal() + 1) as usize;
    let cut = |s: &Series| s.slice((start.ordinal() - s.start().ordinal()) as usize, len);
    Ok((cut(a)?, cut(b)?))
}
