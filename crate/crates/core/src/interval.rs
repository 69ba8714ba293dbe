//! Normal quantiles and Wald intervals.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Result, SobolError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    pub level: f64,
}

impl ConfidenceConfig {
    pub fn new(level: f64) -> Result<Self> {
        let cfg = Self { level };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.level > 0.0 && self.level < 1.0 {
            Ok(())
        } else {
            Err(SobolError::InvalidLevel(self.level))
        }
    }

    /// Two-sided critical value `z_{(1 + level) / 2}`.
    pub fn critical_value(&self) -> Result<f64> {
        self.validate()?;
        Ok(normal_quantile(0.5 * (1.0 + self.level)))
    }
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        Self { level: 0.95 }
    }
}

/// Standard normal quantile, `-sqrt(2) * erfc_inv(2p)`.
///
/// Accurate to a few ulps across `(0, 1)`. Returns `-inf`/`+inf` at 0 and 1
/// and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// `point ± z · sqrt(asym_variance / n)`.
pub fn wald_interval(
    point: f64,
    asym_variance: f64,
    n: usize,
    cfg: &ConfidenceConfig,
) -> Result<(f64, f64)> {
    let z = cfg.critical_value()?;
    if asym_variance.is_nan() || asym_variance < 0.0 {
        return Err(SobolError::InvalidConfig(format!(
            "asymptotic variance must be non-negative, got {asym_variance}"
        )));
    }
    if n == 0 {
        return Err(SobolError::InsufficientData { needed: 1, got: 0 });
    }
    let half_width = z * (asym_variance / n as f64).sqrt();
    Ok((point - half_width, point + half_width))
}
