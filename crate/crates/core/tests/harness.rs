use sobol_core::harness::{expansion_check, run_replications, EstimatorSpec, ReplicationConfig};
use sobol_core::models::{identity, linear_gaussian, parse_model};
use sobol_core::{GdEstimatorConfig, SobolError};

#[test]
fn pick_freeze_mean_is_unbiased_within_three_se() {
    let model = linear_gaussian(1.0, 1.0);
    let mut cfg = ReplicationConfig::new(2000, 200, 11);
    cfg.bound_budget = 200_000;
    let r = run_replications(&model, &EstimatorSpec::PickFreeze, &cfg).unwrap();
    assert!(r.failed_replications.is_empty());
    assert_eq!(r.estimates.len(), 200);
    assert!(r.bias.abs() < 3.0 * r.replication_se, "{} vs {}", r.bias, r.replication_se);
    assert!(r.coverage > 0.88, "coverage {}", r.coverage);
}

#[test]
fn replications_are_deterministic_and_serialise() {
    let model = linear_gaussian(1.0, 1.0);
    let mut cfg = ReplicationConfig::new(300, 50, 3);
    cfg.bound_budget = 100_000;
    let spec = EstimatorSpec::GivenData(GdEstimatorConfig::default());
    let a = run_replications(&model, &spec, &cfg).unwrap();
    let b = run_replications(&model, &spec, &cfg).unwrap();
    assert_eq!(a, b);
    let json = serde_json::to_string(&a).unwrap();
    let back: sobol_core::harness::ReplicationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(a, back);
}

#[test]
fn too_few_replications_are_rejected() {
    let cfg = ReplicationConfig::new(100, 10, 0);
    let err = run_replications(&linear_gaussian(1.0, 1.0), &EstimatorSpec::PickFreeze, &cfg).unwrap_err();
    assert!(matches!(err, SobolError::InvalidConfig(_)), "{err:?}");
}

#[test]
fn model_without_truth_is_rejected() {
    let model = parse_model("product_noise:m=tanh").unwrap();
    let cfg = ReplicationConfig::new(100, 50, 0);
    let err = run_replications(&model, &EstimatorSpec::PickFreeze, &cfg).unwrap_err();
    assert!(matches!(err, SobolError::MissingTruth(_)), "{err:?}");
}

#[test]
fn deterministic_model_has_no_residual() {
    let r = expansion_check(&identity(), &EstimatorSpec::PickFreeze, &[100, 400], 50, 1);
    // Both columns are equal, so the estimate is exactly one and there is nothing to expand.
    let r = match r {
        Ok(r) => r,
        Err(e) => panic!("{e}"),
    };
    assert!(r.rms_scaled_residual.iter().all(|&v| v == 0.0), "{:?}", r.rms_scaled_residual);
}

#[test]
fn expansion_residual_shrinks_for_pick_freeze() {
    let r = expansion_check(&linear_gaussian(1.0, 1.0), &EstimatorSpec::PickFreeze, &[250, 1000, 4000], 100, 5).unwrap();
    assert!(r.strictly_decreasing(), "{:?}", r.rms_scaled_residual);
    let json = serde_json::to_string(&r).unwrap();
    assert_eq!(r, serde_json::from_str(&json).unwrap());
}
