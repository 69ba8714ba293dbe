//! The moment triple `(psi, mu, m2)` and the map that turns it into a Sobol'
//! index, together with the gradient used for delta-method variances.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SobolError};

/// Output variances at or below this value (raw `Y²` units) are treated as
/// a constant output.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Tolerance for the `m2 >= mu²` check on exact (analytic) moments.
pub const EXACT_MOMENT_TOLERANCE: f64 = 1e-12;

/// `psi = E[E[Y|X]²]`, `mu = E[Y]`, `m2 = E[Y²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub psi: f64,
    pub mu: f64,
    pub m2: f64,
}

impl MomentVector {
    /// Builds a triple without checks. Empirical moments may violate the
    /// population inequalities; see [`MomentVector::is_consistent`].
    pub const fn new(psi: f64, mu: f64, m2: f64) -> Self {
        Self { psi, mu, m2 }
    }

    /// Builds a triple of exact moments, rejecting `m2 < mu²` beyond
    /// [`EXACT_MOMENT_TOLERANCE`].
    pub fn exact(psi: f64, mu: f64, m2: f64) -> Result<Self> {
        let m = Self::new(psi, mu, m2);
        if !(psi.is_finite() && mu.is_finite() && m2.is_finite()) {
            return Err(SobolError::InvalidSample(format!("non-finite moments {m:?}")));
        }
        if m.variance() < -EXACT_MOMENT_TOLERANCE {
            return Err(SobolError::InvalidSample(format!(
                "m2 = {m2} is below mu² = {}",
                mu * mu
            )));
        }
        Ok(m)
    }

    /// `m2 - mu²`, the output variance.
    pub fn variance(&self) -> f64 {
        self.m2 - self.mu * self.mu
    }

    /// `psi - mu²`, the variance of the conditional mean.
    pub fn explained_variance(&self) -> f64 {
        self.psi - self.mu * self.mu
    }

    /// Whether `mu² <= psi <= m2` holds up to `tol`. Population moments always
    /// satisfy it; empirical ones need not.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.variance() >= -tol && self.psi <= self.m2 + tol && self.explained_variance() >= -tol
    }

    fn checked_variance(&self) -> Result<f64> {
        let variance = self.variance();
        if variance > DEGENERACY_THRESHOLD {
            Ok(variance)
        } else {
            Err(SobolError::DegenerateVariance {
                variance,
                threshold: DEGENERACY_THRESHOLD,
            })
        }
    }
}

/// `(psi - mu²) / (m2 - mu²)`. No clamping: empirical triples can give values
/// outside `[0, 1]`.
pub fn sobol_from_moments(m: &MomentVector) -> Result<f64> {
    let variance = m.checked_variance()?;
    Ok(m.explained_variance() / variance)
}

/// Gradient of [`sobol_from_moments`] with respect to `(psi, mu, m2)`.
pub fn phi_gradient(m: &MomentVector) -> Result<[f64; 3]> {
    let variance = m.checked_variance()?;
    let v2 = variance * variance;
    Ok([
        1.0 / variance,
        2.0 * m.mu * (m.psi - m.m2) / v2,
        -m.explained_variance() / v2,
    ])
}

/// `gradient · values`.
pub(crate) fn dot3(gradient: &[f64; 3], values: [f64; 3]) -> f64 {
    gradient[0] * values[0] + gradient[1] * values[1] + gradient[2] * values[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phi_hand_examples() {
        let s = sobol_from_moments(&MomentVector::new(7.0, 2.5, 7.5)).unwrap();
        assert!(close(s, 0.6, 1e-12));
        let s = sobol_from_moments(&MomentVector::new(0.0, 0.5, 0.5)).unwrap();
        assert!(close(s, -1.0, 1e-12));
        let s = sobol_from_moments(&MomentVector::new(3.0, 1.2, 3.0)).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn phi_rejects_constant_output() {
        let err = sobol_from_moments(&MomentVector::new(1.0, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, SobolError::DegenerateVariance { .. }));
        assert!(phi_gradient(&MomentVector::new(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn gradient_hand_examples() {
        let g = phi_gradient(&MomentVector::new(7.0, 2.5, 7.5)).unwrap();
        assert!(close(g[0], 0.8, 1e-12));
        assert!(close(g[1], -1.6, 1e-12));
        assert!(close(g[2], -0.48, 1e-12));

        let (psi, m2) = (0.7, 2.0);
        let g = phi_gradient(&MomentVector::new(psi, 0.0, m2)).unwrap();
        assert!(close(g[0], 1.0 / m2, 1e-15));
        assert_eq!(g[1], 0.0);
        assert!(close(g[2], -psi / (m2 * m2), 1e-15));
    }

    #[test]
    fn exact_constructor_checks_cauchy_schwarz() {
        assert!(MomentVector::exact(1.0, 2.0, 3.0).is_err());
        assert!(MomentVector::exact(1.0, 1.0, 1.0 - 1e-13).is_ok());
        assert!(MomentVector::exact(f64::NAN, 0.0, 1.0).is_err());
        assert!(MomentVector::new(0.0, 0.5, 0.5).variance() > 0.0);
        assert!(!MomentVector::new(0.0, 0.5, 0.5).is_consistent(1e-12));
        assert!(MomentVector::new(1.0, 0.0, 2.0).is_consistent(0.0));
    }

    fn valid_moments() -> impl Strategy<Value = MomentVector> {
        (-10.0..10.0f64, 0.01..10.0f64, 0.0..1.0f64).prop_map(|(mu, var, frac)| {
            let m2 = mu * mu + var;
            let psi = mu * mu + frac * var;
            MomentVector::new(psi, mu, m2)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn invariant_under_output_shift(m in valid_moments(), c in -50.0..50.0f64) {
            let shifted = MomentVector::new(
                m.psi + 2.0 * c * m.mu + c * c,
                m.mu + c,
                m.m2 + 2.0 * c * m.mu + c * c,
            );
            let a = sobol_from_moments(&m).unwrap();
            let b = sobol_from_moments(&shifted).unwrap();
            // Cancellation in psi - mu² after the shift costs digits
            // proportional to the shifted magnitude.
            let scale = (m.mu + c).powi(2).max(1.0) / m.variance();
            prop_assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
        }

        #[test]
        fn invariant_under_output_scaling(m in valid_moments(), lambda in prop_oneof![-20.0..-0.05f64, 0.05..20.0f64]) {
            let scaled = MomentVector::new(lambda * lambda * m.psi, lambda * m.mu, lambda * lambda * m.m2);
            let a = sobol_from_moments(&m).unwrap();
            let b = sobol_from_moments(&scaled).unwrap();
            let scale = m.mu.powi(2).max(1.0) / m.variance();
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn gradient_matches_central_differences(
            m in (-3.0..3.0f64, 0.5..10.0f64, 0.0..1.0f64).prop_map(|(mu, var, frac)| {
                MomentVector::new(mu * mu + frac * var, mu, mu * mu + var)
            })
        ) {
            let g = phi_gradient(&m).unwrap();
            let coords = [m.psi, m.mu, m.m2];
            for i in 0..3 {
                let h = 1e-6 * coords[i].abs().max(1.0);
                let mut plus = coords;
                let mut minus = coords;
                plus[i] += h;
                minus[i] -= h;
                let f = |c: [f64; 3]| sobol_from_moments(&MomentVector::new(c[0], c[1], c[2])).unwrap();
                let fd = (f(plus) - f(minus)) / (2.0 * h);
                // Relative to the gradient's overall magnitude, so that a
                // component that vanishes (mu = 0, psi = m2) is not compared
                // against pure rounding noise.
                let norm = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * norm, "i={} fd={} g={}", i, fd, g[i]);
            }
        }
    }
}
