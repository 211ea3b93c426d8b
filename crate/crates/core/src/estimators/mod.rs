//! User-facing estimators of the KL and squared Hellinger divergences.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::counts::MultiplicityTable;
use crate::error::{Error, Result};

mod mixture;
pub mod optimize;
mod plugin;
mod zhang;

pub use mixture::{
    bins_per_axis, estimate_dkl_dp, estimate_dkl_dpm, estimate_dkl_dpm_with, estimate_entropy_nsb,
    estimate_hellinger_dp, estimate_hellinger_dpm, estimate_hellinger_dpm_with, maximize_log_posterior, DpmOptions,
    Objective, PosteriorMaximum, QuadratureGrid, LOG_CONCENTRATION_MAX, LOG_CONCENTRATION_MIN, MEASURE,
};
pub use plugin::{estimate_dkl_plugin, estimate_hellinger_plugin, PluginScheme};
pub use zhang::estimate_dkl_zhang;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub alpha_star: f64,
    /// Absent for single-sample estimators.
    pub beta_star: Option<f64>,
    pub grid_bins_alpha: usize,
    pub grid_bins_beta: usize,
    pub log_evidence_at_max: f64,
    pub at_boundary: bool,
    pub flat: bool,
    /// The quadrature was unusable and the point value at the maximizer
    /// was reported instead.
    pub collapsed: bool,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl EstimateReport {
    fn bare(value: f64) -> Self {
        EstimateReport {
            value,
            posterior_std: None,
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Divergence {
    #[serde(rename = "kl")]
    Kl,
    #[serde(rename = "hellinger2")]
    HellingerSq,
}

impl Divergence {
    pub fn name(self) -> &'static str {
        match self {
            Divergence::Kl => "kl",
            Divergence::HellingerSq => "hellinger2",
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Divergence::Kl),
            "hellinger2" => Ok(Divergence::HellingerSq),
            _ => Err(Error::Config(format!(
                "unknown divergence {s:?} (expected kl or hellinger2)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "String")]
pub enum Estimator {
    Dpm,
    Dp,
    Plugin(PluginScheme),
    Zhang,
}

impl Estimator {
    pub const ALL: [Estimator; 7] = [
        Estimator::Dpm,
        Estimator::Dp,
        Estimator::Plugin(PluginScheme::Naive),
        Estimator::Plugin(PluginScheme::Jeffreys),
        Estimator::Plugin(PluginScheme::Trybula),
        Estimator::Plugin(PluginScheme::Perks),
        Estimator::Zhang,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Dpm => "dpm",
            Estimator::Dp => "dp",
            Estimator::Plugin(s) => s.name(),
            Estimator::Zhang => "zhang",
        }
    }

    pub fn supports(self, divergence: Divergence) -> bool {
        !(self == Estimator::Zhang && divergence == Divergence::HellingerSq)
    }
}

impl From<Estimator> for String {
    fn from(e: Estimator) -> String {
        e.name().to_string()
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator {s:?}")))
    }
}

/// Runs `estimator` for `divergence` on `table`.
pub fn estimate(table: &MultiplicityTable, estimator: Estimator, divergence: Divergence) -> Result<EstimateReport> {
    match (estimator, divergence) {
        (Estimator::Dpm, Divergence::Kl) => estimate_dkl_dpm(table),
        (Estimator::Dpm, Divergence::HellingerSq) => estimate_hellinger_dpm(table),
        (Estimator::Dp, Divergence::Kl) => estimate_dkl_dp(table),
        (Estimator::Dp, Divergence::HellingerSq) => estimate_hellinger_dp(table),
        (Estimator::Plugin(s), Divergence::Kl) => estimate_dkl_plugin(table, s).map(EstimateReport::bare),
        (Estimator::Plugin(s), Divergence::HellingerSq) => {
            estimate_hellinger_plugin(table, s).map(EstimateReport::bare)
        }
        (Estimator::Zhang, Divergence::Kl) => estimate_dkl_zhang(table).map(EstimateReport::bare),
        (Estimator::Zhang, Divergence::HellingerSq) => Err(Error::Config(
            "the Z-estimator is only defined for the KL divergence".into(),
        )),
    }
}
