//! Pick-Freeze estimation.
//!
//! Each observation is a pair `(Y, Y^X)` of outputs that share the input
//! block `X` and use independent copies of the remaining noise. The pair is
//! exchangeable, so every statistic here is symmetric in the two columns.
//!
//! The pairing is trusted as given: nothing checks that a user-supplied file
//! really came from a Pick-Freeze design. The efficient-variance formula also
//! assumes `E[(Y Y^X)²] < ∞`, which cannot be verified from data.

use serde::{Deserialize, Serialize};

use crate::algebra::{dot3, phi_gradient, MomentVector};
use crate::error::{Result, SobolError};
use crate::estimate::{Method, SobolEstimate};
use crate::interval::ConfidenceConfig;
use crate::numeric::{mean_by, pairwise_sum_by};

/// Paired output draws `(Y_i, Y_i^X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickFreezeSample {
    y: Vec<f64>,
    y_pf: Vec<f64>,
}

impl PickFreezeSample {
    pub const MIN_ROWS: usize = 2;

    pub fn new(y: Vec<f64>, y_pf: Vec<f64>) -> Result<Self> {
        if y.len() != y_pf.len() {
            return Err(SobolError::InvalidSample(format!(
                "column lengths differ: y has {}, y_pf has {}",
                y.len(),
                y_pf.len()
            )));
        }
        if y.len() < Self::MIN_ROWS {
            return Err(SobolError::InsufficientData {
                needed: Self::MIN_ROWS,
                got: y.len(),
            });
        }
        if let Some(i) = y.iter().chain(&y_pf).position(|v| !v.is_finite()) {
            return Err(SobolError::InvalidSample(format!(
                "non-finite value in row {}",
                i % y.len()
            )));
        }
        Ok(Self { y, y_pf })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_pf(&self) -> &[f64] {
        &self.y_pf
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.y.iter().copied().zip(self.y_pf.iter().copied())
    }

    /// The same sample with the two columns exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            y: self.y_pf.clone(),
            y_pf: self.y.clone(),
        }
    }

    fn pair_vec(&self) -> Vec<(f64, f64)> {
        self.pairs().collect()
    }
}

/// Values of the efficient influence functions of `E[Y Y^X]`, `E[Y]` and
/// `E[Y²]` at one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfInfluenceTriple {
    pub if_psi: f64,
    pub if_mu: f64,
    pub if_m2: f64,
}

impl PfInfluenceTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.if_psi, self.if_mu, self.if_m2]
    }
}

/// Symmetrised empirical moments: `psi = mean(y * y_pf)`,
/// `mu = mean over both columns`, `m2 = mean of squares over both columns`.
pub fn empirical_moments_pf(s: &PickFreezeSample) -> MomentVector {
    let pairs = s.pair_vec();
    let n = pairs.len() as f64;
    let psi = mean_by(&pairs, |&(a, b)| a * b);
    // Summing a + b per pair keeps the statistic exactly symmetric.
    let mu = pairwise_sum_by(&pairs, &|&(a, b)| a + b) / (2.0 * n);
    let m2 = pairwise_sum_by(&pairs, &|&(a, b)| a * a + b * b) / (2.0 * n);
    MomentVector::new(psi, mu, m2)
}

pub fn pf_influence_triple(y1: f64, y2: f64, m: &MomentVector) -> PfInfluenceTriple {
    PfInfluenceTriple {
        if_psi: y1 * y2 - m.psi,
        if_mu: 0.5 * (y1 + y2) - m.mu,
        if_m2: 0.5 * (y1 * y1 + y2 * y2) - m.m2,
    }
}

/// Efficient influence value of the Sobol' index at one pair: the gradient
/// of the moment-to-index map dotted with [`pf_influence_triple`].
pub fn pf_sobol_influence(y1: f64, y2: f64, m: &MomentVector) -> Result<f64> {
    let g = phi_gradient(m)?;
    Ok(dot3(&g, pf_influence_triple(y1, y2, m).as_array()))
}

/// Influence values at every pair, with the gradient computed once.
pub fn pf_sobol_influences(s: &PickFreezeSample, m: &MomentVector) -> Result<Vec<f64>> {
    let g = phi_gradient(m)?;
    Ok(s.pairs()
        .map(|(a, b)| dot3(&g, pf_influence_triple(a, b, m).as_array()))
        .collect())
}

/// Pick-Freeze estimate of the Sobol' index with its efficient plug-in
/// variance `mean(influence²)` (no degrees-of-freedom correction).
pub fn estimate_sobol_pf(s: &PickFreezeSample, cfg: &ConfidenceConfig) -> Result<SobolEstimate> {
    cfg.validate()?;
    let moments = empirical_moments_pf(s);
    let influences = pf_sobol_influences(s, &moments)?;
    let asym_variance = mean_by(&influences, |v| v * v);
    SobolEstimate::assemble(moments, asym_variance, s.n(), Method::PickFreeze, cfg)
}
