use serde::{Deserialize, Serialize};

use crate::algebra::{sobol_from_moments, MomentVector};
use crate::error::Result;
use crate::interval::{wald_interval, ConfidenceConfig};

/// Which estimator produced a [`SobolEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PickFreeze,
    GivenDataOnestep,
    GivenDataRank,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PickFreeze => "pick_freeze",
            Method::GivenDataOnestep => "given_data_onestep",
            Method::GivenDataRank => "given_data_rank",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point estimate with its plug-in asymptotic variance and Wald interval.
///
/// `asym_variance` estimates the variance of `sqrt(n) * (point - S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolEstimate {
    pub point: f64,
    pub asym_variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n: usize,
    pub method: Method,
    /// The moment triple the point estimate was computed from.
    pub moments: MomentVector,
}

impl SobolEstimate {
    pub(crate) fn assemble(
        moments: MomentVector,
        asym_variance: f64,
        n: usize,
        method: Method,
        cfg: &ConfidenceConfig,
    ) -> Result<Self> {
        let point = sobol_from_moments(&moments)?;
        let (ci_low, ci_high) = wald_interval(point, asym_variance, n, cfg)?;
        Ok(Self {
            point,
            asym_variance,
            ci_low,
            ci_high,
            level: cfg.level,
            n,
            method,
            moments,
        })
    }

    /// Standard error of the point estimate, `sqrt(asym_variance / n)`.
    pub fn std_error(&self) -> f64 {
        (self.asym_variance / self.n as f64).sqrt()
    }
}

/// Sampling design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Paired outputs sharing the input block.
    PickFreeze,
    /// I.i.d. `(X, Y)` rows.
    GivenData,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::PickFreeze => "pick_freeze",
            Setting::GivenData => "given_data",
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Setting {
    type Err = crate::error::SobolError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pick_freeze" => Ok(Setting::PickFreeze),
            "given_data" => Ok(Setting::GivenData),
            other => Err(crate::error::SobolError::InvalidConfig(format!(
                "unknown setting `{other}` (expected pick_freeze or given_data)"
            ))),
        }
    }
}
