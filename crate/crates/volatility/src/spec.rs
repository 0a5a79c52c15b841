//! The fourteen model variants and their parameter layouts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Garch,
    Sv,
}

/// The one feature a named variant toggles on top of its family baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Base,
    TwoLags,
    Jump,
    InMean,
    Ma1,
    StudentT,
    Leverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelSpec {
    pub family: Family,
    pub feature: Feature,
}

const FEATURES: [Feature; 7] = [
    Feature::Base,
    Feature::TwoLags,
    Feature::Jump,
    Feature::InMean,
    Feature::Ma1,
    Feature::StudentT,
    Feature::Leverage,
];

impl ModelSpec {
    pub const fn new(family: Family, feature: Feature) -> Self {
        Self { family, feature }
    }

    /// GARCH variants first, then SV, each in table order.
    pub fn all() -> Vec<ModelSpec> {
        [Family::Garch, Family::Sv]
            .into_iter()
            .flat_map(|f| FEATURES.into_iter().map(move |x| ModelSpec::new(f, x)))
            .collect()
    }

    pub fn name(&self) -> &'static str {
        use Family::*;
        use Feature::*;
        match (self.family, self.feature) {
            (Garch, Base) => "GARCH",
            (Garch, TwoLags) => "GARCH-2",
            (Garch, Jump) => "GARCH-J",
            (Garch, InMean) => "GARCH-M",
            (Garch, Ma1) => "GARCH-MA",
            (Garch, StudentT) => "GARCH-t",
            (Garch, Leverage) => "GARCH-GJR",
            (Sv, Base) => "SV",
            (Sv, TwoLags) => "SV-2",
            (Sv, Jump) => "SV-J",
            (Sv, InMean) => "SV-M",
            (Sv, Ma1) => "SV-MA",
            (Sv, StudentT) => "SV-t",
            (Sv, Leverage) => "SV-L",
        }
    }

    pub fn variance_lags(&self) -> usize {
        if self.feature == Feature::TwoLags {
            2
        } else {
            1
        }
    }

    pub fn has(&self, feature: Feature) -> bool {
        self.feature == feature
    }

    pub fn param_layout(&self) -> Vec<ParamDef> {
        use Support::*;
        let mut out = vec![ParamDef::new("mu", Real)];
        match self.family {
            Family::Garch => {
                out.push(ParamDef::new("alpha0", Positive));
                out.push(ParamDef::new("alpha1", Positive));
                out.push(ParamDef::new("beta1", Positive));
                match self.feature {
                    Feature::TwoLags => out.push(ParamDef::new("beta2", Positive)),
                    Feature::Leverage => out.push(ParamDef::new("gamma", Positive)),
                    _ => {}
                }
            }
            Family::Sv => {
                out.push(ParamDef::new("mu_h", Real));
                if self.feature == Feature::TwoLags {
                    out.push(ParamDef::new("phi", Real));
                    out.push(ParamDef::new("phi2", Real));
                } else {
                    out.push(ParamDef::new("phi", Interval(-1.0, 1.0)));
                }
                out.push(ParamDef::new("sigma_h2", Positive));
                if self.feature == Feature::Leverage {
                    out.push(ParamDef::new("rho", Interval(-1.0, 1.0)));
                }
            }
        }
        match self.feature {
            Feature::Jump => {
                out.push(ParamDef::new("kappa", Interval(0.0, 0.1)));
                out.push(ParamDef::new("mu_j", Real));
                out.push(ParamDef::new("sigma_j", Positive));
            }
            Feature::InMean => out.push(ParamDef::new("lambda", Real)),
            Feature::Ma1 => out.push(ParamDef::new("psi", Interval(-1.0, 1.0))),
            Feature::StudentT => out.push(ParamDef::new("nu", Above(2.0))),
            _ => {}
        }
        out
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.param_layout().into_iter().map(|p| p.name).collect()
    }

    pub fn dim(&self) -> usize {
        self.param_layout().len()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelSpec::all()
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Support of a parameter and the bijection used by the samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Real,
    Positive,
    Interval(f64, f64),
    Above(f64),
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Support {
    pub fn to_constrained(self, u: f64) -> f64 {
        match self {
            Support::Real => u,
            Support::Positive => u.exp(),
            Support::Interval(a, b) => a + (b - a) * logistic(u),
            Support::Above(a) => a + u.exp(),
        }
    }

    pub fn to_unconstrained(self, x: f64) -> f64 {
        match self {
            Support::Real => x,
            Support::Positive => x.ln(),
            Support::Interval(a, b) => {
                let p = (x - a) / (b - a);
                (p / (1.0 - p)).ln()
            }
            Support::Above(a) => (x - a).ln(),
        }
    }

    /// `log |d x / d u|` at unconstrained `u`.
    pub fn log_jacobian(self, u: f64) -> f64 {
        match self {
            Support::Real => 0.0,
            Support::Positive | Support::Above(_) => u,
            Support::Interval(a, b) => {
                // log s(u) + log(1 - s(u)) = -|u| - 2 log(1 + e^{-|u|})
                (b - a).ln() - u.abs() - 2.0 * (-u.abs()).exp().ln_1p()
            }
        }
    }

    pub fn contains(self, x: f64) -> bool {
        match self {
            Support::Real => x.is_finite(),
            Support::Positive => x > 0.0 && x.is_finite(),
            Support::Interval(a, b) => x > a && x < b,
            Support::Above(a) => x > a && x.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDef {
    pub name: &'static str,
    pub support: Support,
}

impl ParamDef {
    pub const fn new(name: &'static str, support: Support) -> Self {
        Self { name, support }
    }
}

/// Maps an unconstrained vector to parameters, returning the log Jacobian.
pub fn constrain(layout: &[ParamDef], u: &[f64]) -> (Vec<f64>, f64) {
    let mut lj = 0.0;
    let x = layout
        .iter()
        .zip(u)
        .map(|(p, &ui)| {
            lj += p.support.log_jacobian(ui);
            p.support.to_constrained(ui)
        })
        .collect();
    (x, lj)
}

pub fn unconstrain(layout: &[ParamDef], x: &[f64]) -> Vec<f64> {
    layout.iter().zip(x).map(|(p, &xi)| p.support.to_unconstrained(xi)).collect()
}
