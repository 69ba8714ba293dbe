use sobol_core::models::{
    efficiency_bound, g_function, identity, ishigami, linear_gaussian, product_noise,
    sample_givendata, sample_pickfreeze, MeanFunction,
};
use sobol_core::{builtin_models, ReplicationSeed, Setting};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn pick_freeze_correlation_matches_index() {
    let model = linear_gaussian(1.0, 1.0);
    let s = sample_pickfreeze(&model, 100_000, ReplicationSeed::new(42, 0)).unwrap();
    let rho = correlation(s.y(), s.y_pf());
    assert!((rho - 0.5).abs() < 0.01, "corr = {rho}");
}

#[test]
fn given_data_moments_of_linear_gaussian() {
    let s = sample_givendata(&linear_gaussian(1.0, 1.0), 100_000, ReplicationSeed::new(43, 0)).unwrap();
    assert!(mean(s.y()).abs() < 0.02);
    assert!((variance(s.y()) - 2.0).abs() < 0.05);
}

#[test]
fn deterministic_model_samples_are_identical_columns() {
    let seed = ReplicationSeed::new(5, 5);
    let pf = sample_pickfreeze(&identity(), 1000, seed).unwrap();
    assert_eq!(pf.y(), pf.y_pf());
    let gd = sample_givendata(&identity(), 1000, seed).unwrap();
    assert!(gd.rows().zip(gd.y()).all(|(x, &y)| x[0] == y));
}

#[test]
fn samplers_are_deterministic_and_replications_differ() {
    for model in builtin_models() {
        let a = sample_pickfreeze(&model, 500, ReplicationSeed::new(9, 3)).unwrap();
        let b = sample_pickfreeze(&model, 500, ReplicationSeed::new(9, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_pickfreeze(&model, 500, ReplicationSeed::new(9, 4)).unwrap();
        let shared = a.y().iter().filter(|v| c.y().contains(v)).count();
        assert_eq!(shared, 0, "{}: replications share outputs", model.name());

        let g1 = sample_givendata(&model, 500, ReplicationSeed::new(9, 3)).unwrap();
        assert_eq!(g1, sample_givendata(&model, 500, ReplicationSeed::new(9, 3)).unwrap());
    }
}

#[test]
fn pick_freeze_columns_are_exchangeable() {
    let n = 100_000;
    let critical = 1.628 * (2.0 / n as f64).sqrt();
    for model in builtin_models() {
        let s = sample_pickfreeze(&model, n, ReplicationSeed::new(77, 0)).unwrap();
        let d = ks_statistic(s.y(), s.y_pf());
        assert!(d < critical, "{}: KS = {d} >= {critical}", model.name());
    }
}

#[test]
fn sample_moments_agree_with_truths() {
    // Five standard errors on each of mean and second moment.
    let n = 400_000;
    for model in [ishigami(7.0, 0.1), g_function(&[0.0, 1.0, 4.5, 9.0]).unwrap(), product_noise(MeanFunction::Square, 0.5)] {
        let t = model.truth().unwrap();
        let s = sample_givendata(&model, n, ReplicationSeed::new(1, 0)).unwrap();
        let y = s.y();
        let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
        let se_mu = (variance(y) / n as f64).sqrt();
        let se_m2 = (variance(&sq) / n as f64).sqrt();
        assert!((mean(y) - t.moments.mu).abs() < 5.0 * se_mu, "{}", model.name());
        assert!((mean(&sq) - t.moments.m2).abs() < 5.0 * se_m2, "{}", model.name());
        // The oracle regression must reproduce E[Y] on average.
        let m: Vec<f64> = s.rows().map(|x| (t.m_oracle)(x)).collect();
        assert!((mean(&m) - t.moments.mu).abs() < 5.0 * se_mu, "{}", model.name());
    }
}

#[test]
fn noiseless_given_data_bound_is_zero() {
    let b = efficiency_bound(&identity(), Setting::GivenData, 100_000, ReplicationSeed::new(0, 0)).unwrap();
    assert!(b.value < 1e-10, "bound = {}", b.value);
    let b = efficiency_bound(&identity(), Setting::PickFreeze, 100_000, ReplicationSeed::new(0, 0)).unwrap();
    assert!(b.value < 1e-10, "bound = {}", b.value);
}

#[test]
fn bound_is_reproducible_across_seeds() {
    let model = linear_gaussian(1.0, 1.0);
    let a = efficiency_bound(&model, Setting::PickFreeze, 1_000_000, ReplicationSeed::new(1, 0)).unwrap();
    let b = efficiency_bound(&model, Setting::PickFreeze, 1_000_000, ReplicationSeed::new(2, 0)).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 3.0 * se, "{a:?} vs {b:?}");

    let gd = efficiency_bound(&model, Setting::GivenData, 1_000_000, ReplicationSeed::new(3, 0)).unwrap();
    let combined = (a.std_error.powi(2) + gd.std_error.powi(2)).sqrt();
    // Reported, not asserted: the paired design is expected to need less.
    eprintln!(
        "bound pick_freeze = {:.5} ± {:.5}, given_data = {:.5} ± {:.5}, pf <= gd + 3se: {}",
        a.value,
        a.std_error,
        gd.value,
        gd.std_error,
        a.value <= gd.value + 3.0 * combined
    );
}
