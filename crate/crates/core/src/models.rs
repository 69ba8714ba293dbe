//! Analytic test models `Y = G(X, W)` with independent input block `X` and
//! noise `W`, their samplers, and closed-form truths.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{dot3, phi_gradient, sobol_from_moments, MomentVector};
use crate::error::{Result, SobolError};
use crate::estimate::Setting;
use crate::givendata::{gd_influence, GivenDataSample, OracleFn};
use crate::numeric::{mean_by, pairwise_sum_by, sample_variance};
use crate::pickfreeze::{pf_influence_triple, PickFreezeSample};
use crate::rng::{ReplicationSeed, StreamRole, UniformStream};

/// Minimum Monte Carlo budget for [`efficiency_bound`].
pub const MIN_BOUND_BUDGET: usize = 100_000;

/// Marginal law of each coordinate of an input or noise block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Law {
    StandardNormal,
    Uniform { lo: f64, hi: f64 },
}

impl Law {
    fn draw(&self, stream: &mut UniformStream) -> f64 {
        match *self {
            Law::StandardNormal => stream.next_gaussian(),
            Law::Uniform { lo, hi } => lo + (hi - lo) * stream.next_open01(),
        }
    }
}

pub type ResponseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Closed-form quantities of a model.
#[derive(Clone)]
pub struct Truth {
    pub s_true: f64,
    pub moments: MomentVector,
    /// `x -> E[Y | X = x]`.
    pub m_oracle: OracleFn,
}

impl Truth {
    pub fn new(moments: MomentVector, m_oracle: OracleFn) -> Result<Self> {
        let moments = MomentVector::exact(moments.psi, moments.mu, moments.m2)?;
        Ok(Self {
            s_true: sobol_from_moments(&moments)?,
            moments,
            m_oracle,
        })
    }
}

impl fmt::Debug for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Truth")
            .field("s_true", &self.s_true)
            .field("moments", &self.moments)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct TestModel {
    name: String,
    d: usize,
    noise_dim: usize,
    input_law: Law,
    noise_law: Law,
    response: ResponseFn,
    truth: Option<Truth>,
}

impl fmt::Debug for TestModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestModel")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("noise_dim", &self.noise_dim)
            .field("input_law", &self.input_law)
            .field("noise_law", &self.noise_law)
            .field("truth", &self.truth)
            .finish()
    }
}

impl TestModel {
    pub fn new(
        name: impl Into<String>,
        (d, input_law): (usize, Law),
        (noise_dim, noise_law): (usize, Law),
        response: ResponseFn,
        truth: Option<Truth>,
    ) -> Self {
        Self {
            name: name.into(),
            d,
            noise_dim,
            input_law,
            noise_law,
            response,
            truth,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension of the input block `X`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    pub fn require_truth(&self) -> Result<&Truth> {
        self.truth
            .as_ref()
            .ok_or_else(|| SobolError::MissingTruth(self.name.clone()))
    }

    pub fn evaluate(&self, x: &[f64], w: &[f64]) -> f64 {
        (self.response)(x, w)
    }

    fn draw_block(&self, law: Law, width: usize, n: usize, stream: &mut UniformStream) -> Vec<f64> {
        (0..n * width).map(|_| law.draw(stream)).collect()
    }

    fn draw_inputs(&self, n: usize, seed: ReplicationSeed) -> Vec<f64> {
        let mut s = UniformStream::new(seed, StreamRole::Inputs);
        self.draw_block(self.input_law, self.d, n, &mut s)
    }

    fn draw_noise(&self, n: usize, seed: ReplicationSeed, role: StreamRole) -> Vec<f64> {
        let mut s = UniformStream::new(seed, role);
        self.draw_block(self.noise_law, self.noise_dim, n, &mut s)
    }

    fn responses(&self, x: &[f64], w: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                self.evaluate(
                    &x[i * self.d..(i + 1) * self.d],
                    &w[i * self.noise_dim..(i + 1) * self.noise_dim],
                )
            })
            .collect()
    }
}

/// `Y_i = G(X_i, W_i)` and `Y_i^X = G(X_i, W_i')` with independent noise
/// copies. Row `i` of a given-data sample drawn with the same seed shares
/// `X_i` and `W_i`.
pub fn sample_pickfreeze(
    model: &TestModel,
    n: usize,
    seed: ReplicationSeed,
) -> Result<PickFreezeSample> {
    let x = model.draw_inputs(n, seed);
    let w = model.draw_noise(n, seed, StreamRole::Noise);
    let w_frozen = model.draw_noise(n, seed, StreamRole::FrozenNoise);
    PickFreezeSample::new(model.responses(&x, &w, n), model.responses(&x, &w_frozen, n))
}

pub fn sample_givendata(
    model: &TestModel,
    n: usize,
    seed: ReplicationSeed,
) -> Result<GivenDataSample> {
    let x = model.draw_inputs(n, seed);
    let w = model.draw_noise(n, seed, StreamRole::Noise);
    let y = model.responses(&x, &w, n);
    GivenDataSample::new(x, model.d, y)
}

/// `Y = a X + b W`, `X, W ~ N(0, 1)`.
pub fn linear_gaussian(a: f64, b: f64) -> TestModel {
    let truth = Truth::new(
        MomentVector::new(a * a, 0.0, a * a + b * b),
        Arc::new(move |x: &[f64]| a * x[0]),
    )
    .ok();
    TestModel::new(
        format!("linear_gaussian:a={a},b={b}"),
        (1, Law::StandardNormal),
        (1, Law::StandardNormal),
        Arc::new(move |x, w| a * x[0] + b * w[0]),
        truth,
    )
}

/// `Y = X`, `X ~ N(0, 1)`, no noise.
pub fn identity() -> TestModel {
    TestModel::new(
        "identity",
        (1, Law::StandardNormal),
        (0, Law::StandardNormal),
        Arc::new(|x, _| x[0]),
        Truth::new(MomentVector::new(1.0, 0.0, 1.0), Arc::new(|x: &[f64]| x[0])).ok(),
    )
}

/// Ishigami function `sin V1 + a sin² V2 + b V3⁴ sin V1` on `U(-pi, pi)³`,
/// with `X = V1` and `W = (V2, V3)`.
pub fn ishigami(a: f64, b: f64) -> TestModel {
    let pi4 = PI.powi(4);
    let lift = 1.0 + b * pi4 / 5.0;
    let mu = a / 2.0;
    let var_first = 0.5 * lift * lift;
    let var_total = a * a / 8.0 + b * pi4 / 5.0 + b * b * PI.powi(8) / 18.0 + 0.5;
    let truth = Truth::new(
        MomentVector::new(var_first + mu * mu, mu, var_total + mu * mu),
        Arc::new(move |x: &[f64]| x[0].sin() * lift + mu),
    )
    .ok();
    let u = Law::Uniform { lo: -PI, hi: PI };
    TestModel::new(
        format!("ishigami:a={a},b={b}"),
        (1, u),
        (2, u),
        Arc::new(move |x, w| {
            let s1 = x[0].sin();
            s1 + a * w[0].sin().powi(2) + b * w[1].powi(4) * s1
        }),
        truth,
    )
}

/// Sobol' g-function `prod_j (|4 V_j - 2| + a_j) / (1 + a_j)` on
/// `U(0, 1)^p`, with `X = V1` and `W` the remaining coordinates.
pub fn g_function(coefficients: &[f64]) -> Result<TestModel> {
    if coefficients.len() < 2 || coefficients.iter().any(|&a| a.is_nan() || a < 0.0) {
        return Err(SobolError::InvalidConfig(
            "g_function needs at least two non-negative coefficients".into(),
        ));
    }
    let coeffs: Arc<[f64]> = coefficients.into();
    let partial: Vec<f64> = coeffs.iter().map(|a| 1.0 / (3.0 * (1.0 + a) * (1.0 + a))).collect();
    let m2: f64 = partial.iter().map(|v| 1.0 + v).product();
    let a1 = coeffs[0];
    let truth = Truth::new(
        MomentVector::new(1.0 + partial[0], 1.0, m2),
        Arc::new(move |x: &[f64]| ((4.0 * x[0] - 2.0).abs() + a1) / (1.0 + a1)),
    )
    .ok();
    let factor = |v: f64, a: f64| ((4.0 * v - 2.0).abs() + a) / (1.0 + a);
    let c = coeffs.clone();
    let listed: Vec<String> = coeffs.iter().map(|a| a.to_string()).collect();
    Ok(TestModel::new(
        format!("g_function:a={}", listed.join(";")),
        (1, Law::Uniform { lo: 0.0, hi: 1.0 }),
        (coeffs.len() - 1, Law::Uniform { lo: 0.0, hi: 1.0 }),
        Arc::new(move |x, w| {
            factor(x[0], c[0]) * w.iter().zip(&c[1..]).map(|(&v, &a)| factor(v, a)).product::<f64>()
        }),
        truth,
    ))
}

/// Regression function of the additive-noise model.
#[derive(Clone)]
pub enum MeanFunction {
    /// `c x`
    Linear(f64),
    Sin,
    /// `x²`
    Square,
    /// Arbitrary regression function with optional known `(E[m(X)],
    /// E[m(X)²])` under `X ~ U(-pi, pi)`.
    Custom {
        name: String,
        m: OracleFn,
        moments: Option<(f64, f64)>,
    },
}

/// `Y = m(X) + sigma W`, `X ~ U(-pi, pi)`, `W ~ N(0, 1)`.
pub fn product_noise(mean_fn: MeanFunction, sigma: f64) -> TestModel {
    let (label, m, moments): (String, OracleFn, Option<(f64, f64)>) = match mean_fn {
        MeanFunction::Linear(c) => (
            format!("linear{c}"),
            Arc::new(move |x: &[f64]| c * x[0]),
            Some((0.0, c * c * PI * PI / 3.0)),
        ),
        MeanFunction::Sin => ("sin".into(), Arc::new(|x: &[f64]| x[0].sin()), Some((0.0, 0.5))),
        MeanFunction::Square => (
            "square".into(),
            Arc::new(|x: &[f64]| x[0] * x[0]),
            Some((PI * PI / 3.0, PI.powi(4) / 5.0)),
        ),
        MeanFunction::Custom { name, m, moments } => (name, m, moments),
    };
    let truth = moments.and_then(|(e1, e2)| {
        Truth::new(MomentVector::new(e2, e1, e2 + sigma * sigma), m.clone()).ok()
    });
    let mm = m.clone();
    TestModel::new(
        format!("product_noise:m={label},sigma={sigma}"),
        (1, Law::Uniform { lo: -PI, hi: PI }),
        (1, Law::StandardNormal),
        Arc::new(move |x, w| mm(x) + sigma * w[0]),
        truth,
    )
}

pub const DEFAULT_G_COEFFICIENTS: [f64; 4] = [0.0, 1.0, 4.5, 9.0];

/// The registry's models with default parameters.
pub fn builtin_models() -> Vec<TestModel> {
    vec![
        linear_gaussian(1.0, 1.0),
        ishigami(7.0, 0.1),
        g_function(&DEFAULT_G_COEFFICIENTS).expect("default coefficients are valid"),
        product_noise(MeanFunction::Sin, 1.0),
        identity(),
    ]
}

/// Resolves a model from `name[:key=value,...]`, e.g.
/// `linear_gaussian:a=1,b=1`, `ishigami:a=7,b=0.1`, `g_function:a=0;1;4.5;9`,
/// `product_noise:m=sin,sigma=0.5` or `identity`.
pub fn parse_model(spec: &str) -> Result<TestModel> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut pairs = Vec::new();
    for item in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| SobolError::InvalidConfig(format!("expected key=value, got `{item}`")))?;
        pairs.push((k.trim(), v.trim()));
    }
    let known = |allowed: &[&str]| -> Result<()> {
        match pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(SobolError::InvalidConfig(format!(
                "unknown parameter `{k}` for model `{name}`"
            ))),
            None => Ok(()),
        }
    };
    let get = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let num = |key: &str, default: f64| -> Result<f64> {
        match get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| SobolError::InvalidConfig(format!("`{key}={v}` is not a number"))),
        }
    };
    match name {
        "linear_gaussian" => {
            known(&["a", "b"])?;
            Ok(linear_gaussian(num("a", 1.0)?, num("b", 1.0)?))
        }
        "ishigami" => {
            known(&["a", "b"])?;
            Ok(ishigami(num("a", 7.0)?, num("b", 0.1)?))
        }
        "g_function" => {
            known(&["a"])?;
            let coeffs = match get("a") {
                None => DEFAULT_G_COEFFICIENTS.to_vec(),
                Some(list) => list
                    .split(';')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            SobolError::InvalidConfig(format!("bad g_function coefficient `{v}`"))
                        })
                    })
                    .collect::<Result<_>>()?,
            };
            g_function(&coeffs)
        }
        "product_noise" => {
            known(&["m", "sigma", "c"])?;
            let mean_fn = match get("m").unwrap_or("sin") {
                "sin" => MeanFunction::Sin,
                "square" => MeanFunction::Square,
                "linear" => MeanFunction::Linear(num("c", 1.0)?),
                // No closed-form moments: usable for sampling, not verification.
                "tanh" => MeanFunction::Custom {
                    name: "tanh".into(),
                    m: Arc::new(|x: &[f64]| x[0].tanh()),
                    moments: None,
                },
                other => {
                    return Err(SobolError::InvalidConfig(format!(
                        "unknown mean function `{other}` (sin, square, linear, tanh)"
                    )))
                }
            };
            Ok(product_noise(mean_fn, num("sigma", 1.0)?))
        }
        "identity" => {
            known(&[])?;
            Ok(identity())
        }
        _ => Err(SobolError::UnknownModel(spec.to_string())),
    }
}

/// Monte Carlo estimate of a model's efficiency bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    /// Mean of the squared true influence values.
    pub value: f64,
    pub std_error: f64,
    pub budget: usize,
}

/// Values of the true combined efficient influence function of the index at
/// the rows of a Pick-Freeze sample.
pub fn true_pf_influences(truth: &Truth, s: &PickFreezeSample) -> Result<Vec<f64>> {
    let g = phi_gradient(&truth.moments)?;
    Ok(s.pairs()
        .map(|(a, b)| dot3(&g, pf_influence_triple(a, b, &truth.moments).as_array()))
        .collect())
}

/// Same for a given-data sample, using the exact regression function.
pub fn true_gd_influences(truth: &Truth, s: &GivenDataSample) -> Result<Vec<f64>> {
    let g = phi_gradient(&truth.moments)?;
    let m = &truth.moments;
    Ok(s.rows()
        .zip(s.y())
        .map(|(x, &y)| {
            let mx = (truth.m_oracle)(x);
            dot3(&g, [gd_influence(y, mx, m.psi), y - m.mu, y * y - m.m2])
        })
        .collect())
}

/// `E[influence²]` of the index in the given setting, by Monte Carlo over
/// `budget` fresh draws.
pub fn efficiency_bound(
    model: &TestModel,
    setting: Setting,
    budget: usize,
    seed: ReplicationSeed,
) -> Result<BoundEstimate> {
    let truth = model.require_truth()?;
    if budget < MIN_BOUND_BUDGET {
        return Err(SobolError::InvalidConfig(format!(
            "bound budget {budget} is below the minimum {MIN_BOUND_BUDGET}"
        )));
    }
    let influences = match setting {
        Setting::PickFreeze => true_pf_influences(truth, &sample_pickfreeze(model, budget, seed)?)?,
        Setting::GivenData => true_gd_influences(truth, &sample_givendata(model, budget, seed)?)?,
    };
    let squares: Vec<f64> = influences.iter().map(|v| v * v).collect();
    Ok(BoundEstimate {
        value: mean_by(&squares, |v| *v),
        std_error: (sample_variance(&squares) / budget as f64).sqrt(),
        budget,
    })
}

/// Brute-force Monte Carlo estimate of a model's moments, independent of any
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTruth {
    pub moments: MomentVector,
    /// Standard errors of `psi`, `mu` and `m2`.
    pub moment_std_errors: [f64; 3],
    pub s: f64,
    pub s_std_error: f64,
    pub draws: usize,
}

const ORACLE_CHUNK: usize = 1 << 16;

/// Estimates `(psi, mu, m2)` and the index from `draws` Pick-Freeze pairs:
/// `psi` as the mean of `Y Y^X`, `mu` and `m2` from both columns. Chunk `c`
/// is drawn from replication seed `(seed, c)`.
pub fn monte_carlo_truth(model: &TestModel, draws: usize, seed: u64) -> Result<MonteCarloTruth> {
    if draws < MIN_BOUND_BUDGET {
        return Err(SobolError::InvalidConfig(format!(
            "oracle budget {draws} is below the minimum {MIN_BOUND_BUDGET}"
        )));
    }
    let chunks = draws.div_ceil(ORACLE_CHUNK);
    // Per chunk: sums of the three terms, then of their six products.
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = ORACLE_CHUNK.min(draws - c * ORACLE_CHUNK);
            let s = sample_pickfreeze(model, len, ReplicationSeed::new(seed, c as u64))?;
            let t: Vec<[f64; 3]> = s
                .pairs()
                .map(|(a, b)| [a * b, 0.5 * (a + b), 0.5 * (a * a + b * b)])
                .collect();
            let mut out = [0.0; 9];
            for j in 0..3 {
                out[j] = pairwise_sum_by(&t, &|v| v[j]);
            }
            for (slot, (j, l)) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                out[3 + slot] = pairwise_sum_by(&t, &|v| v[j] * v[l]);
            }
            Ok(out)
        })
        .collect::<Result<Vec<[f64; 9]>>>()?;
    let n = draws as f64;
    let total = |j: usize| pairwise_sum_by(&sums, &|s| s[j]) / n;
    let mean = [total(0), total(1), total(2)];
    let cov = |slot: usize, j: usize, l: usize| total(3 + slot) - mean[j] * mean[l];
    let sigma = [
        [cov(0, 0, 0), cov(3, 0, 1), cov(4, 0, 2)],
        [cov(3, 0, 1), cov(1, 1, 1), cov(5, 1, 2)],
        [cov(4, 0, 2), cov(5, 1, 2), cov(2, 2, 2)],
    ];
    let moments = MomentVector::new(mean[0], mean[1], mean[2]);
    let g = phi_gradient(&moments)?;
    let s_var: f64 = (0..3)
        .flat_map(|j| (0..3).map(move |l| (j, l)))
        .map(|(j, l)| g[j] * sigma[j][l] * g[l])
        .sum();
    Ok(MonteCarloTruth {
        moments,
        moment_std_errors: [0, 1, 2].map(|j| (sigma[j][j].max(0.0) / n).sqrt()),
        s: sobol_from_moments(&moments)?,
        s_std_error: (s_var.max(0.0) / n).sqrt(),
        draws,
    })
}
