//! Causality in quantiles: quantile autoregressions, the kernel-weighted
//! S_T statistic with subsampling inference, and the augmented QAR used to
//! sign the effect of a lagged regressor across quantiles.

pub mod augmented;
pub mod causality;
pub mod qar;
pub mod qreg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use augmented::{augmented_qar, AugmentedConfig, AugmentedQar, BetaBand};
pub use causality::{
    causality_table, st_quadratic_form, st_statistic, subsample_pvalue, subsample_pvalues, CausalityQuantileResult,
    QuantileCell, SubsampleOutcome, SubsamplingConfig,
};
pub use qar::{fit_qar, QarModel};
pub use qreg::{check_loss, quantile_regression, QuantileFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Deciles,
    Vigintiles,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    levels: Vec<f64>,
    kind: GridKind,
}

impl QuantileGrid {
    /// 0.1, 0.2, ..., 0.9.
    pub fn deciles() -> Self {
        Self {
            levels: (1..=9).map(|i| i as f64 / 10.0).collect(),
            kind: GridKind::Deciles,
        }
    }

    /// 0.05, 0.10, ..., 0.95.
    pub fn vigintiles() -> Self {
        Self {
            levels: (1..=19).map(|i| i as f64 / 20.0).collect(),
            kind: GridKind::Vigintiles,
        }
    }

    /// Levels in any order; they are stored sorted.
    pub fn custom(mut levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::InvalidGrid(format!("level {l} outside (0, 1)")));
        }
        levels.sort_by(|a, b| a.total_cmp(b));
        if levels.windows(2).any(|w| w[1] == w[0]) {
            return Err(Error::InvalidGrid("levels must be distinct".into()));
        }
        Ok(Self {
            levels,
            kind: GridKind::Custom,
        })
    }

    pub fn single(tau: f64) -> Result<Self> {
        Self::custom(vec![tau])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `[lo, hi]` for multi-level grids, the level itself otherwise.
    pub fn label(&self) -> String {
        if self.levels.len() == 1 {
            format!("{}", self.levels[0])
        } else {
            format!("[{}, {}]", self.levels[0], self.levels[self.levels.len() - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(QuantileGrid::deciles().len(), 9);
        assert_eq!(QuantileGrid::vigintiles().len(), 19);
        assert_eq!(QuantileGrid::deciles().label(), "[0.1, 0.9]");
        assert_eq!(QuantileGrid::custom(vec![0.5, 0.4]).unwrap().levels(), &[0.4, 0.5]);
        assert!(QuantileGrid::custom(vec![0.5, 0.5]).is_err());
        assert!(QuantileGrid::custom(vec![0.0]).is_err());
        assert!(QuantileGrid::custom(vec![]).is_err());
        assert_eq!(QuantileGrid::single(0.5).unwrap().label(), "0.5");
    }
}
