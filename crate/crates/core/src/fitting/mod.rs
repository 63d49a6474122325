//! Weighted least-squares fits of the Ramsey and Hahn-echo models, and the
//! readout signal-to-noise calculator.

mod io;
mod lm;
mod model;

use serde::{Deserialize, Serialize};

pub use io::{read_fit_data, write_fit_data, write_model_curve};
pub use lm::{fit_model, numeric_jacobian, FitOptions, FitReport, JacobianMode};
pub use model::{hahn_model, ramsey_model, HahnParams, RamseyParams};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ramsey,
    Hahn,
}

impl ModelKind {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Ramsey => &RamseyParams::NAMES,
            ModelKind::Hahn => &HahnParams::NAMES,
        }
    }

    pub fn n_params(self) -> usize {
        self.names().len()
    }

    pub fn eval(self, tau: f64, p: &[f64]) -> f64 {
        match self {
            ModelKind::Ramsey => model::ramsey_eval(tau, p),
            ModelKind::Hahn => model::hahn_eval(tau, p),
        }
    }

    pub fn jacobian(self, tau: f64, p: &[f64], out: &mut [f64]) {
        match self {
            ModelKind::Ramsey => model::ramsey_jacobian(tau, p, out),
            ModelKind::Hahn => model::hahn_jacobian(tau, p, out),
        }
    }

    /// Parameters free by default: everything except the background, which
    /// is pinned at its initial value (normally 0 for differenced data).
    pub fn default_free(self) -> Vec<bool> {
        let n = self.n_params();
        (0..n).map(|i| i + 1 != n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub tau: f64,
    pub counts: f64,
    pub weight: f64,
}

impl DataPoint {
    /// Poisson weighting `1 / max(y, 1)`.
    pub fn with_default_weight(tau: f64, counts: f64) -> Self {
        Self { tau, counts, weight: 1.0 / counts.max(1.0) }
    }
}

/// Count levels for a bright/dark readout comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutLevels {
    pub i_bright: f64,
    pub i_dark: f64,
    pub n: f64,
}

/// Number of readouts needed for unit signal-to-noise,
/// `N = (n/2)(I_B + I_D) / (I_B − I_D)²`.
pub fn required_readouts(levels: &ReadoutLevels) -> Result<f64> {
    let ReadoutLevels { i_bright, i_dark, n } = *levels;
    if ![i_bright, i_dark, n].iter().all(|v| v.is_finite()) {
        return Err(Error::param("readout levels must be finite"));
    }
    if n <= 0.0 {
        return Err(Error::param(format!("shot count n = {n} must be > 0")));
    }
    if i_dark < 0.0 || i_bright <= i_dark {
        return Err(Error::DegenerateReadout { bright: i_bright, dark: i_dark });
    }
    let diff = i_bright - i_dark;
    Ok(0.5 * n * (i_bright + i_dark) / (diff * diff))
}
