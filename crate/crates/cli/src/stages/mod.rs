//! Pipeline stages. Each stage reads the dataset, the configuration and the
//! available volatility series and returns tables plus extra files; seeds
//! come from the master seed through stage-scoped labels, so dropping one
//! stage leaves the others untouched.

pub mod causality;
pub mod diagnostics;
pub mod summary;
pub mod volatility;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use causvol_core::rng::derive_seed;
use causvol_core::Series;

use crate::config::PipelineConfig;
use crate::data::Dataset;
use crate::error::StageError;
use crate::report::Table;

/// Every seed handed out during a run, by label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedRegistry {
    master: u64,
    pub issued: BTreeMap<String, u64>,
}

impl SeedRegistry {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            issued: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, label: &str) -> u64 {
        let s = derive_seed(self.master, label, 0);
        self.issued.insert(label.to_string(), s);
        s
    }
}

pub struct Context<'a> {
    pub config: &'a PipelineConfig,
    pub data: &'a Dataset,
    /// Volatility series by commodity.
    pub volatility: &'a BTreeMap<String, Series>,
    pub output_dir: &'a Path,
}

#[derive(Debug, Default)]
pub struct StageOutput {
    pub tables: Vec<Table>,
    /// Plain files (name, contents) written next to the tables.
    pub files: Vec<(String, String)>,
    /// Files a stage wrote itself.
    pub written: Vec<PathBuf>,
    pub errors: Vec<StageError>,
}

impl StageOutput {
    pub fn fail(&mut self, stage: &str, message: impl std::fmt::Display) {
        self.errors.push(StageError::new(stage, message));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    Returns,
    Volatility,
}

impl Panel {
    pub fn label(self) -> &'static str {
        match self {
            Panel::Returns => "returns",
            Panel::Volatility => "volatility",
        }
    }
}

/// Series analysed in a panel, labelled `"<commodity> <panel>"`.
pub struct Target {
    pub commodity: String,
    pub panel: Panel,
    pub series: Series,
}

impl Target {
    pub fn label(&self) -> String {
        format!("{} {}", self.commodity, self.panel.label())
    }
}

/// Returns targets, then volatility targets when requested. A missing
/// volatility series is reported against `stage`.
pub fn targets(ctx: &Context, stage: &str, with_volatility: bool, out: &mut StageOutput) -> Vec<Target> {
    let mut t: Vec<Target> = ctx
        .data
        .returns
        .iter()
        .map(|s| Target {
            commodity: s.name().to_string(),
            panel: Panel::Returns,
            series: s.clone(),
        })
        .collect();
    if with_volatility {
        for s in &ctx.data.returns {
            match ctx.volatility.get(s.name()) {
                Some(v) => t.push(Target {
                    commodity: s.name().to_string(),
                    panel: Panel::Volatility,
                    series: v.clone(),
                }),
                None => out.fail(stage, format!("no volatility series for `{}` (upstream stage failed)", s.name())),
            }
        }
    }
    t
}
