//! Monte Carlo replication harness.
//!
//! [`run_replications`] draws independent samples from a model with known
//! truth, applies an estimator to each, and compares the spread of
//! `sqrt(n) * (estimate - S)` with the Monte Carlo efficiency bound.
//! [`expansion_check`] measures the remainder of the first-order expansion
//! `estimate = S + mean(true influence) + r_n` and reports the RMS of
//! `sqrt(n) * r_n`, which must shrink as `n` grows for an efficient estimator.
//!
//! Replication `r` always uses the seed `(master_seed, r)` and results are
//! reduced in replication order, so reports do not depend on the thread pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SobolError};
use crate::estimate::{Method, Setting, SobolEstimate};
use crate::givendata::{estimate_sobol_gd, GdEstimatorConfig, GdRegression};
use crate::interval::ConfidenceConfig;
use crate::models::{
    efficiency_bound, sample_givendata, sample_pickfreeze, true_gd_influences, true_pf_influences,
    TestModel,
};
use crate::numeric::{mean, mean_by, sample_variance};
use crate::pickfreeze::estimate_sobol_pf;
use crate::rng::ReplicationSeed;

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_REPS: usize = 50;
pub const DEFAULT_BOUND_BUDGET: usize = 1_000_000;
/// Reports are refused when more than this fraction of replications fail.
pub const MAX_FAILURE_RATE: f64 = 0.001;

/// Replication index reserved for the efficiency-bound draws.
const BOUND_REPLICATION: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    PickFreeze,
    GivenData(GdEstimatorConfig),
}

impl EstimatorSpec {
    pub fn setting(&self) -> Setting {
        match self {
            EstimatorSpec::PickFreeze => Setting::PickFreeze,
            EstimatorSpec::GivenData(_) => Setting::GivenData,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            EstimatorSpec::PickFreeze => Method::PickFreeze,
            EstimatorSpec::GivenData(cfg) => match cfg.regression {
                GdRegression::Knn => Method::GivenDataOnestep,
                GdRegression::RankPairing => Method::GivenDataRank,
            },
        }
    }

    fn estimate(&self, model: &TestModel, n: usize, seed: ReplicationSeed) -> Result<Sampled> {
        let ccfg = ConfidenceConfig::default();
        let truth = model.require_truth()?;
        match self {
            EstimatorSpec::PickFreeze => {
                let s = sample_pickfreeze(model, n, seed)?;
                let estimate = estimate_sobol_pf(&s, &ccfg)?;
                let influence_mean = mean(&true_pf_influences(truth, &s)?);
                Ok(Sampled {
                    estimate,
                    influence_mean,
                })
            }
            EstimatorSpec::GivenData(cfg) => {
                let s = sample_givendata(model, n, seed)?;
                let estimate = estimate_sobol_gd(&s, cfg, &ccfg)?;
                let influence_mean = mean(&true_gd_influences(truth, &s)?);
                Ok(Sampled {
                    estimate,
                    influence_mean,
                })
            }
        }
    }
}

struct Sampled {
    estimate: SobolEstimate,
    /// Mean of the true efficient influence values over the sample.
    influence_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationConfig {
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub bound_budget: usize,
}

impl ReplicationConfig {
    pub fn new(n: usize, reps: usize, master_seed: u64) -> Self {
        Self {
            n,
            reps,
            master_seed,
            bound_budget: DEFAULT_BOUND_BUDGET,
        }
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(SobolError::InvalidConfig(format!(
            "at least {MIN_REPS} replications are required, got {reps}"
        )));
    }
    Ok(())
}

/// Runs `reps` replications, keeping results in replication order and failing
/// when too many of them error.
fn replicate(
    model: &TestModel,
    spec: &EstimatorSpec,
    n: usize,
    reps: usize,
    master_seed: u64,
) -> Result<(Vec<Sampled>, Vec<u64>)> {
    let results: Vec<Result<Sampled>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| spec.estimate(model, n, ReplicationSeed::new(master_seed, r)))
        .collect();
    let mut ok = Vec::with_capacity(reps);
    let mut failed = Vec::new();
    let mut first_error = None;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => ok.push(v),
            Err(e @ SobolError::MissingTruth(_)) => return Err(e),
            Err(e) => {
                failed.push(r as u64);
                first_error.get_or_insert(e);
            }
        }
    }
    if failed.len() as f64 > MAX_FAILURE_RATE * reps as f64 || ok.len() < 2 {
        return Err(SobolError::TooManyFailures {
            failed: failed.len(),
            reps,
            first: Box::new(first_error.expect("at least one failure")),
        });
    }
    Ok((ok, failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub schema_version: u32,
    pub model: String,
    pub setting: Setting,
    pub estimator: Method,
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub s_true: f64,
    /// Point estimates of the successful replications, in replication order.
    pub estimates: Vec<f64>,
    /// Indices of replications whose estimator returned an error.
    pub failed_replications: Vec<u64>,
    pub mean: f64,
    pub bias: f64,
    /// Standard error of `mean`.
    pub replication_se: f64,
    /// Sample variance of `sqrt(n) * (estimate - s_true)`.
    pub var_scaled: f64,
    /// Average of the per-replication plug-in asymptotic variances.
    pub mean_asym_variance: f64,
    /// Fraction of Wald intervals (level 0.95) that contain `s_true`.
    pub coverage: f64,
    pub bound: f64,
    pub bound_mc_se: f64,
    /// `var_scaled / bound`; `None` when the bound is zero.
    pub efficiency_ratio: Option<f64>,
}

pub fn run_replications(
    model: &TestModel,
    spec: &EstimatorSpec,
    cfg: &ReplicationConfig,
) -> Result<ReplicationReport> {
    let truth = model.require_truth()?;
    check_reps(cfg.reps)?;
    let bound = efficiency_bound(
        model,
        spec.setting(),
        cfg.bound_budget,
        ReplicationSeed::new(cfg.master_seed, BOUND_REPLICATION),
    )?;
    let (samples, failed) = replicate(model, spec, cfg.n, cfg.reps, cfg.master_seed)?;

    let estimates: Vec<f64> = samples.iter().map(|s| s.estimate.point).collect();
    let m = mean(&estimates);
    let var = sample_variance(&estimates);
    let var_scaled = cfg.n as f64 * var;
    let covered = samples
        .iter()
        .filter(|s| s.estimate.ci_low <= truth.s_true && truth.s_true <= s.estimate.ci_high)
        .count();
    Ok(ReplicationReport {
        schema_version: SCHEMA_VERSION,
        model: model.name().to_string(),
        setting: spec.setting(),
        estimator: spec.method(),
        n: cfg.n,
        reps: cfg.reps,
        master_seed: cfg.master_seed,
        s_true: truth.s_true,
        mean: m,
        bias: m - truth.s_true,
        replication_se: (var / estimates.len() as f64).sqrt(),
        var_scaled,
        mean_asym_variance: mean_by(&samples, |s| s.estimate.asym_variance),
        coverage: covered as f64 / samples.len() as f64,
        bound: bound.value,
        bound_mc_se: bound.std_error,
        efficiency_ratio: (bound.value > 0.0).then(|| var_scaled / bound.value),
        estimates,
        failed_replications: failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub schema_version: u32,
    pub model: String,
    pub setting: Setting,
    pub estimator: Method,
    pub master_seed: u64,
    pub n_values: Vec<usize>,
    /// RMS over replications of `sqrt(n) * r_n`, aligned with `n_values`.
    pub rms_scaled_residual: Vec<f64>,
    /// Successful replications per entry of `n_values`.
    pub reps: Vec<usize>,
    pub failed_replications: Vec<Vec<u64>>,
}

impl ExpansionReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rms_scaled_residual.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn expansion_check(
    model: &TestModel,
    spec: &EstimatorSpec,
    n_values: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<ExpansionReport> {
    let truth = model.require_truth()?;
    check_reps(reps)?;
    if n_values.is_empty() {
        return Err(SobolError::InvalidConfig("no sample sizes given".into()));
    }
    let mut rms = Vec::with_capacity(n_values.len());
    let mut counts = Vec::with_capacity(n_values.len());
    let mut failures = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let (samples, failed) = replicate(model, spec, n, reps, master_seed)?;
        let root_n = (n as f64).sqrt();
        let ms = mean_by(&samples, |s| {
            let r = s.estimate.point - truth.s_true - s.influence_mean;
            (root_n * r).powi(2)
        });
        rms.push(ms.sqrt());
        counts.push(samples.len());
        failures.push(failed);
    }
    Ok(ExpansionReport {
        schema_version: SCHEMA_VERSION,
        model: model.name().to_string(),
        setting: spec.setting(),
        estimator: spec.method(),
        master_seed,
        n_values: n_values.to_vec(),
        rms_scaled_residual: rms,
        reps: counts,
        failed_replications: failures,
    })
}
