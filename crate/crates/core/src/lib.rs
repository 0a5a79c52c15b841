//! Numerical core: monthly series handling, stationarity and nonlinearity
//! diagnostics, and linear, nonparametric and quantile Granger-causality tests.

pub mod bds;
pub mod error;
pub mod linalg;
pub mod nonparam;
pub mod quantile;
pub mod rng;
pub mod series;
pub mod stats;
pub mod unit_root;
pub mod var;

pub use error::{Error, Result};
pub use series::{Period, Series};
