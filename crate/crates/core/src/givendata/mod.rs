//! Given-data estimation from i.i.d. rows `(X_i, Y_i)`.
//!
//! The index is `phi(psi, mu, m2)` with `mu`, `m2` the plain sample moments
//! of `Y` and `psi = E[E[Y|X]²]` estimated either by a cross-fitted one-step
//! correction of the kNN plug-in, or by nearest-neighbour pairing. The
//! variance always comes from the efficient influence function
//! `(2y - m(x)) m(x) - psi`, combined with the influence functions of the two
//! linear moments through the gradient of `phi`, using the out-of-fold kNN
//! fit for `m`. The influence function needs `E[Y⁴] < ∞`, which is assumed
//! and not checked.

mod knn;
mod rank;

use serde::{Deserialize, Serialize};

use crate::algebra::{dot3, phi_gradient, MomentVector};
use crate::error::{Result, SobolError};
use crate::estimate::{Method, SobolEstimate};
use crate::interval::ConfidenceConfig;
use crate::numeric::{mean, mean_by};

pub use knn::{
    cross_fit_knn, fit_knn, fold_assignment, FitMethod, OracleFn, RegressionFit, Standardizer,
};
pub use rank::{pairing_neighbours, psi_rank_pairing};

/// I.i.d. rows `(X_i, Y_i)` with `X_i` in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GivenDataSample {
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
}

impl GivenDataSample {
    /// Rows required by the cross-fitted estimators with the default two
    /// folds.
    pub const MIN_ROWS: usize = 4;

    /// `x` is row-major with `d` columns.
    pub fn new(x: Vec<f64>, d: usize, y: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(SobolError::InvalidSample("input dimension must be at least 1".into()));
        }
        if x.len() != y.len() * d {
            return Err(SobolError::InvalidSample(format!(
                "{} input values do not form {} rows of dimension {d}",
                x.len(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(SobolError::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(SobolError::InvalidSample(format!("non-finite input in row {}", i / d)));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SobolError::InvalidSample(format!("non-finite output in row {i}")));
        }
        Ok(Self { x, y, d })
    }

    /// Builds a sample from `d` input columns.
    pub fn from_columns(columns: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = columns.len();
        if let Some(c) = columns.iter().find(|c| c.len() != y.len()) {
            return Err(SobolError::InvalidSample(format!(
                "input column has {} rows, output has {}",
                c.len(),
                y.len()
            )));
        }
        let x = (0..y.len())
            .flat_map(|i| columns.iter().map(move |c| c[i]))
            .collect();
        Self::new(x, d, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }
}

/// How `E[E[Y|X]²]` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdRegression {
    /// Cross-fitted kNN regression with a one-step correction.
    Knn,
    /// Nearest-neighbour pairing.
    RankPairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdEstimatorConfig {
    pub regression: GdRegression,
    pub k: KChoice,
    pub folds: usize,
    /// Seed of the shuffle that assigns rows to folds.
    pub seed: u64,
}

impl Default for GdEstimatorConfig {
    fn default() -> Self {
        Self {
            regression: GdRegression::Knn,
            k: KChoice::Auto,
            folds: 2,
            seed: 0,
        }
    }
}

/// `max(2, round(n^0.6))` for `d = 1`, `max(2, round(n^(4 / (4 + d))))`
/// otherwise.
pub fn default_k(n: usize, d: usize) -> usize {
    let exponent = if d == 1 { 0.6 } else { 4.0 / (4.0 + d as f64) };
    ((n as f64).powf(exponent).round() as usize).max(2)
}

impl GdEstimatorConfig {
    /// Checks the configuration against a sample size and returns the
    /// neighbour count to use. `Auto` is capped so that `k * folds < n`.
    pub fn resolve_k(&self, n: usize, d: usize) -> Result<usize> {
        if self.folds < 2 {
            return Err(SobolError::InvalidConfig(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        let needed = 2 * self.folds;
        if n < needed {
            return Err(SobolError::InsufficientData { needed, got: n });
        }
        let max_k = (n - 1) / self.folds;
        match self.k {
            KChoice::Auto => Ok(default_k(n, d).min(max_k).max(1)),
            KChoice::Fixed(k) if k >= 1 && k <= max_k => Ok(k),
            KChoice::Fixed(k) => Err(SobolError::InvalidK {
                k,
                n,
                reason: "must satisfy 1 <= k < n / folds",
            }),
        }
    }
}

/// `mean(m̂(X_i)²)`.
pub fn psi_plugin(s: &GivenDataSample, fit: &RegressionFit) -> f64 {
    mean_by(&fit.predict_rows(s), |m| m * m)
}

/// Efficient influence value `(2y - m) m - psi` of `E[E[Y|X]²]` at one row,
/// where `m_val` is the regression function evaluated at the row's input.
pub fn gd_influence(y_val: f64, m_val: f64, psi: f64) -> f64 {
    (2.0 * y_val - m_val) * m_val - psi
}

/// One-step estimate `mean((2 Y_i - m_i) m_i)` from given regression values.
pub fn psi_onestep_from_predictions(y: &[f64], m: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = y.iter().copied().zip(m.iter().copied()).collect();
    mean_by(&pairs, |&(y, m)| (2.0 * y - m) * m)
}

/// Cross-fitted one-step estimate of `E[E[Y|X]²]`.
pub fn psi_onestep(s: &GivenDataSample, cfg: &GdEstimatorConfig) -> Result<f64> {
    let k = cfg.resolve_k(s.n(), s.d())?;
    let m = cross_fit_knn(s, k, cfg.folds, cfg.seed)?;
    Ok(psi_onestep_from_predictions(s.y(), &m))
}

/// One-step estimate with a fixed regression function (no cross-fitting).
pub fn psi_onestep_fitted(s: &GivenDataSample, fit: &RegressionFit) -> f64 {
    psi_onestep_from_predictions(s.y(), &fit.predict_rows(s))
}

/// Sample moments with the supplied `psi`.
pub fn empirical_moments_gd(s: &GivenDataSample, psi: f64) -> MomentVector {
    MomentVector::new(psi, mean(s.y()), mean_by(s.y(), |v| v * v))
}

/// Combined influence values of the index at every row:
/// `grad phi · (gd_influence, y - mu, y² - m2)`.
pub fn gd_sobol_influences(
    s: &GivenDataSample,
    m: &[f64],
    moments: &MomentVector,
) -> Result<Vec<f64>> {
    let g = phi_gradient(moments)?;
    Ok(s.y()
        .iter()
        .zip(m)
        .map(|(&y, &mi)| {
            dot3(
                &g,
                [
                    gd_influence(y, mi, moments.psi),
                    y - moments.mu,
                    y * y - moments.m2,
                ],
            )
        })
        .collect())
}

/// Details of a given-data estimate beyond the [`SobolEstimate`] itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GdFitSummary {
    pub estimate: SobolEstimate,
    /// Neighbour count of the cross-fitted regression (`None` for an oracle).
    pub k_used: Option<usize>,
    pub folds: usize,
    pub d: usize,
}

fn assemble(
    s: &GivenDataSample,
    psi: f64,
    m: &[f64],
    method: Method,
    ccfg: &ConfidenceConfig,
) -> Result<SobolEstimate> {
    let moments = empirical_moments_gd(s, psi);
    let influences = gd_sobol_influences(s, m, &moments)?;
    let asym_variance = mean_by(&influences, |v| v * v);
    SobolEstimate::assemble(moments, asym_variance, s.n(), method, ccfg)
}

/// Given-data Sobol' estimate with efficient plug-in variance.
pub fn estimate_sobol_gd(
    s: &GivenDataSample,
    cfg: &GdEstimatorConfig,
    ccfg: &ConfidenceConfig,
) -> Result<SobolEstimate> {
    estimate_sobol_gd_detailed(s, cfg, ccfg).map(|r| r.estimate)
}

pub fn estimate_sobol_gd_detailed(
    s: &GivenDataSample,
    cfg: &GdEstimatorConfig,
    ccfg: &ConfidenceConfig,
) -> Result<GdFitSummary> {
    ccfg.validate()?;
    let k = cfg.resolve_k(s.n(), s.d())?;
    let m = cross_fit_knn(s, k, cfg.folds, cfg.seed)?;
    let (psi, method) = match cfg.regression {
        GdRegression::Knn => (psi_onestep_from_predictions(s.y(), &m), Method::GivenDataOnestep),
        GdRegression::RankPairing => (psi_rank_pairing(s)?, Method::GivenDataRank),
    };
    Ok(GdFitSummary {
        estimate: assemble(s, psi, &m, method, ccfg)?,
        k_used: Some(k),
        folds: cfg.folds,
        d: s.d(),
    })
}

/// One-step given-data estimate using a fixed regression function, e.g. the
/// exact conditional mean of a test model.
pub fn estimate_sobol_gd_with_fit(
    s: &GivenDataSample,
    fit: &RegressionFit,
    ccfg: &ConfidenceConfig,
) -> Result<SobolEstimate> {
    ccfg.validate()?;
    let m = fit.predict_rows(s);
    let psi = psi_onestep_from_predictions(s.y(), &m);
    assemble(s, psi, &m, Method::GivenDataOnestep, ccfg)
}
