//! Estimation of first-order Sobol' indices with efficient asymptotic
//! variances.
//!
//! Two sampling designs are supported. In the Pick-Freeze design each input
//! block `X` is observed with two outputs `(Y, Y^X)` computed from independent
//! noise, and the index is estimated from symmetrised empirical moments
//! ([`estimate_sobol_pf`]). In the given-data design only i.i.d. `(X, Y)` rows
//! are available and `E[E[Y|X]²]` is estimated by a cross-fitted one-step kNN
//! estimator or a nearest-neighbour pairing ([`estimate_sobol_gd`]). In both
//! cases the reported variance is the empirical second moment of the
//! efficient influence function of the index.
//!
//! The [`models`] and [`harness`] modules provide analytic test models and a
//! replication engine that checks estimators against the efficiency bound.

pub mod algebra;
pub mod error;
pub mod estimate;
pub mod givendata;
pub mod harness;
pub mod interval;
pub mod models;
pub mod numeric;
pub mod pickfreeze;
pub mod rng;

pub use algebra::{phi_gradient, sobol_from_moments, MomentVector, DEGENERACY_THRESHOLD};
pub use error::{Result, SobolError};
pub use estimate::{Method, Setting, SobolEstimate};
pub use givendata::{
    estimate_sobol_gd, estimate_sobol_gd_detailed, estimate_sobol_gd_with_fit, fit_knn,
    gd_influence, psi_onestep, psi_plugin, psi_rank_pairing, GdEstimatorConfig, GdRegression,
    GivenDataSample, KChoice, RegressionFit,
};
pub use harness::{
    expansion_check, run_replications, EstimatorSpec, ExpansionReport, ReplicationConfig,
    ReplicationReport,
};
pub use interval::{normal_quantile, wald_interval, ConfidenceConfig};
pub use models::{
    builtin_models, efficiency_bound, monte_carlo_truth, parse_model, sample_givendata,
    sample_pickfreeze, MonteCarloTruth,
    BoundEstimate, TestModel, Truth,
};
pub use pickfreeze::{
    empirical_moments_pf, estimate_sobol_pf, pf_influence_triple, pf_sobol_influence,
    PfInfluenceTriple, PickFreezeSample,
};
pub use rng::ReplicationSeed;
