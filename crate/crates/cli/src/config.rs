//! The TOML run configuration (schema version 1).
//!
//! Every stage section is optional; a missing section means the stage does
//! not run. Paths are relative to the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use causvol_volatility::marglik::ProposalFamily;
use causvol_volatility::{Family, Feature, ModelSpec, PriorConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: String,
    pub data: DataConfig,
    pub summary: Option<SummaryConfig>,
    pub volatility: Option<VolatilityConfig>,
    pub unit_root: Option<UnitRootConfig>,
    pub bds: Option<BdsConfig>,
    pub granger: Option<GrangerConfig>,
    pub nonparam: Option<NonparamConfig>,
    pub quantile: Option<QuantileConfig>,
}

fn default_output() -> String {
    "output".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: String,
    #[serde(default = "default_date")]
    pub date_column: String,
    /// Price index column; nominal prices are deflated by it when present.
    pub cpi: Option<String>,
    pub commodities: Vec<Commodity>,
    pub causes: Vec<Cause>,
    /// Volatility series supplied in the file instead of (or besides) a fit.
    #[serde(default)]
    pub volatility: Vec<SuppliedVolatility>,
}

fn default_date() -> String {
    "date".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commodity {
    pub column: String,
    pub name: Option<String>,
    /// The column already holds percent returns.
    #[serde(default)]
    pub returns: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cause {
    pub column: String,
    pub name: Option<String>,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuppliedVolatility {
    pub column: String,
    pub commodity: String,
}

impl Commodity {
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.column)
    }
}

impl Cause {
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SummaryConfig {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolatilityConfig {
    pub models: Vec<ModelSpec>,
    /// Model whose extracted volatility feeds the downstream tests.
    pub source: ModelSpec,
    pub burn_in: usize,
    pub draws: usize,
    pub chains: usize,
    pub thin_paths: usize,
    pub is_draws: usize,
    pub inner_draws: usize,
    pub proposal: ProposalFamily,
    pub save_draws: bool,
    pub priors: PriorConfig,
}

impl Default for VolatilityConfig {
    fn default() -> Self {
        Self {
            models: ModelSpec::all(),
            source: ModelSpec::new(Family::Sv, Feature::Ma1),
            burn_in: 2000,
            draws: 5000,
            chains: 1,
            thin_paths: 10,
            is_draws: 5000,
            inner_draws: 100,
            proposal: ProposalFamily::FullCovariance,
            save_draws: false,
            priors: PriorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Aic,
    Sic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitRootConfig {
    pub adf_max_lag: usize,
    pub criterion: Criterion,
    /// Fixed PP bandwidth; Newey-West automatic when absent.
    pub pp_bandwidth: Option<usize>,
    pub perron_max_lag: usize,
    pub perron_trim: f64,
    pub volatility: bool,
}

impl Default for UnitRootConfig {
    fn default() -> Self {
        Self {
            adf_max_lag: 12,
            criterion: Criterion::Sic,
            pp_bandwidth: None,
            perron_max_lag: 8,
            perron_trim: 0.15,
            volatility: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BdsConfig {
    pub max_dimension: usize,
    pub eps_std: f64,
    /// VAR lag for the residual panels; AIC up to `var_max_lag` when absent.
    pub var_lag: Option<usize>,
    pub var_max_lag: usize,
    pub volatility: bool,
}

impl Default for BdsConfig {
    fn default() -> Self {
        Self {
            max_dimension: 6,
            eps_std: 0.7,
            var_lag: None,
            var_max_lag: 12,
            volatility: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrangerConfig {
    /// Forced VAR lag; AIC up to `max_lag` when absent.
    pub lag: Option<usize>,
    pub max_lag: usize,
    pub volatility: bool,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            lag: None,
            max_lag: 12,
            volatility: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpBandwidth {
    Fixed,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonparamConfig {
    pub max_lag: usize,
    pub bandwidth: f64,
    pub dp_bandwidth: DpBandwidth,
    pub volatility: bool,
}

impl Default for NonparamConfig {
    fn default() -> Self {
        Self {
            max_lag: 6,
            bandwidth: 1.5,
            dp_bandwidth: DpBandwidth::Fixed,
            volatility: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    Deciles,
    Vigintiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantileConfig {
    pub orders: Vec<usize>,
    pub grids: Vec<GridChoice>,
    /// Block constant `k` in `b = floor(k T^{2/5})`.
    pub k: f64,
    pub volatility: bool,
    pub augmented: bool,
    pub augmented_replicates: usize,
}

impl Default for QuantileConfig {
    fn default() -> Self {
        Self {
            orders: vec![1, 2, 3],
            grids: vec![GridChoice::Deciles],
            k: 5.0,
            volatility: true,
            augmented: false,
            augmented_replicates: 200,
        }
    }
}

/// A parsed config together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let config = PipelineConfig::from_toml(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.config.data.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output_dir)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, so formatting and comments in the
    /// TOML file do not change it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn commodity_names(&self) -> Vec<&str> {
        self.data.commodities.iter().map(Commodity::name).collect()
    }

    /// True when some selected stage asks for volatility panels.
    pub fn needs_volatility(&self) -> bool {
        self.unit_root.as_ref().is_some_and(|c| c.volatility)
            || self.bds.as_ref().is_some_and(|c| c.volatility)
            || self.granger.as_ref().is_some_and(|c| c.volatility)
            || self.nonparam.as_ref().is_some_and(|c| c.volatility)
            || self.quantile.as_ref().is_some_and(|c| c.volatility)
    }

    /// Static checks that need no data.
    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema {
                found: self.schema_version,
                supported: SCHEMA_VERSION,
            });
        }
        if self.data.commodities.is_empty() {
            return invalid("data.commodities is empty".into());
        }
        if self.data.causes.is_empty() {
            return invalid("data.causes is empty".into());
        }
        let mut names = BTreeSet::new();
        for n in self.commodity_names().into_iter().chain(self.data.causes.iter().map(Cause::name)) {
            if !names.insert(n) {
                return invalid(format!("variable name `{n}` is used twice"));
            }
        }
        for v in &self.data.volatility {
            if !self.commodity_names().contains(&v.commodity.as_str()) {
                return invalid(format!("data.volatility refers to unknown commodity `{}`", v.commodity));
            }
        }
        if let Some(v) = &self.volatility {
            if v.models.is_empty() {
                return invalid("volatility.models is empty".into());
            }
            if !v.models.contains(&v.source) {
                return invalid(format!("volatility.source `{}` is not in volatility.models", v.source));
            }
            if v.models.iter().collect::<BTreeSet<_>>().len() != v.models.len() {
                return invalid("volatility.models lists a model twice".into());
            }
            if v.draws < 1000 {
                return invalid("volatility.draws must be at least 1000".into());
            }
            if v.chains == 0 || v.is_draws < 2 || v.inner_draws < 2 || v.thin_paths == 0 {
                return invalid("volatility.chains, thin_paths must be positive and is_draws, inner_draws at least 2".into());
            }
        }
        if let Some(q) = &self.quantile {
            if !(q.k >= 1.0) {
                return invalid(format!("quantile.k must be at least 1, got {}", q.k));
            }
            if q.orders.is_empty() || q.orders.iter().any(|o| !(1..=3).contains(o)) {
                return invalid("quantile.orders must be a non-empty subset of 1, 2, 3".into());
            }
            if q.grids.is_empty() {
                return invalid("quantile.grids is empty".into());
            }
        }
        if let Some(b) = &self.bds {
            if b.max_dimension < 2 || !(b.eps_std > 0.0) {
                return invalid("bds.max_dimension must be at least 2 and bds.eps_std positive".into());
            }
        }
        if let Some(n) = &self.nonparam {
            if n.max_lag == 0 || !(n.bandwidth > 0.0) {
                return invalid("nonparam.max_lag and nonparam.bandwidth must be positive".into());
            }
        }
        if let Some(u) = &self.unit_root {
            if !(0.0..0.5).contains(&u.perron_trim) || u.perron_trim == 0.0 {
                return invalid("unit_root.perron_trim must lie in (0, 0.5)".into());
            }
        }
        if self.needs_volatility() && self.volatility.is_none() {
            for c in self.commodity_names() {
                if !self.data.volatility.iter().any(|v| v.commodity == c) {
                    return Err(ConfigError::MissingVolatility { commodity: c.to_string() });
                }
            }
        }
        Ok(())
    }
}
