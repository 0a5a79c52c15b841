//! Test-data generator for the `simulate` subcommand.
//!
//! ```toml
//! model = "SV-MA"
//! n = 442
//! seed = 7
//! start = "1981-02"
//!
//! [params]
//! mu = 0.0
//! mu_h = 2.5
//! phi = 0.95
//! sigma_h2 = 0.05
//! psi = 0.3
//! ```
//!
//! Every parameter of the model's layout must be given, and nothing else.

use std::collections::BTreeMap;

use causvol_core::{Period, Series};
use causvol_volatility::sv::simulate_sv_with_states;
use causvol_volatility::{simulate_garch, Family, GarchParams, ModelSpec, SvParams};
use serde::Deserialize;

use crate::error::ConfigError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub model: String,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: String,
    pub params: BTreeMap<String, f64>,
}

fn default_start() -> String {
    "2000-01".into()
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl DgpSpec {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    fn theta(&self, spec: &ModelSpec) -> Result<Vec<f64>, ConfigError> {
        let layout = spec.param_layout();
        for k in self.params.keys() {
            if !layout.iter().any(|p| p.name == k) {
                return Err(invalid(format!("{} has no parameter `{k}`", spec.name())));
            }
        }
        layout
            .iter()
            .map(|p| {
                self.params
                    .get(p.name)
                    .copied()
                    .ok_or_else(|| invalid(format!("{} needs parameter `{}`", spec.name(), p.name)))
            })
            .collect()
    }
}

/// CSV with `date,value`, plus the latent log variance `h` for SV models.
pub fn simulate(dgp: &DgpSpec) -> Result<String, ConfigError> {
    let spec: ModelSpec = dgp.model.parse().map_err(|e: causvol_volatility::Error| invalid(e.to_string()))?;
    let start: Period = dgp.start.parse().map_err(|e: String| invalid(e))?;
    if dgp.n == 0 {
        return Err(invalid("n must be positive"));
    }
    let theta = dgp.theta(&spec)?;
    let verr = |e: causvol_volatility::Error| invalid(e.to_string());
    let (y, h) = match spec.family {
        Family::Garch => {
            let p = GarchParams::from_vec(&spec, &theta).map_err(verr)?;
            (simulate_garch(&spec, &p, dgp.n, dgp.seed).map_err(verr)?, None)
        }
        Family::Sv => {
            let p = SvParams::from_vec(&spec, &theta).map_err(verr)?;
            let (y, h) = simulate_sv_with_states(&spec, &p, dgp.n, dgp.seed).map_err(verr)?;
            (y, Some(h))
        }
    };
    let y = Series::new("value", start, y.into_values()).map_err(|e| invalid(e.to_string()))?;
    let mut out = String::from(if h.is_some() { "date,value,h\n" } else { "date,value\n" });
    for (i, (p, v)) in y.timestamps().zip(y.values()).enumerate() {
        match &h {
            Some(h) => out.push_str(&format!("{p},{v},{}\n", h[i])),
            None => out.push_str(&format!("{p},{v}\n")),
        }
    }
    Ok(out)
}
