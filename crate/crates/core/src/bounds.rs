//! Closed-form smoothed bounds: the expected shadow size `𝒟(n, d, σ)`, the
//! conditioning floor `κ₀`, and the expected pivot counts of the two phases.
//!
//! `lg` is base 2 and `ln` natural. Everything is evaluated in `f64`; values
//! beyond the range overflow to `+∞`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("bounds need d >= 3 (got {0})")]
    DimensionTooSmall(usize),
    #[error("bounds need n > d (got n = {n}, d = {d})")]
    TooFewConstraints { n: usize, d: usize },
    #[error("sigma must be positive and finite (got {0})")]
    Sigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    n: usize,
    d: usize,
    sigma: f64,
}

impl BoundInputs {
    pub fn new(n: usize, d: usize, sigma: f64) -> Result<Self, DomainError> {
        if d < 3 {
            return Err(DomainError::DimensionTooSmall(d));
        }
        if n <= d {
            return Err(DomainError::TooFewConstraints { n, d });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(DomainError::Sigma(sigma));
        }
        Ok(Self { n, d, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }
}

/// Expected shadow size: `58888678 n d³ / min(σ, 1/(3√(d ln n)))⁶`.
pub fn shadow_bound(b: &BoundInputs) -> f64 {
    let (n, d) = (b.n as f64, b.d as f64);
    let cap = 1.0 / (3.0 * (d * n.ln()).sqrt());
    58_888_678.0 * n * d.powi(3) / b.sigma.min(cap).powi(6)
}

/// `σ min(1, σ) / (12 d² n⁷ √(ln n))`
pub fn kappa0(b: &BoundInputs) -> f64 {
    let (n, d) = (b.n as f64, b.d as f64);
    b.sigma * b.sigma.min(1.0) / (12.0 * d * d * n.powi(7) * n.ln().sqrt())
}

/// Expected phase-1 pivots.
pub fn phase1_bound(b: &BoundInputs) -> f64 {
    let (n, d, s) = (b.n as f64, b.d as f64, b.sigma);
    let ln_n = n.ln();
    let inner = s.powi(4).min(1.0) / (12_960.0 * d.powf(8.5) * n.powi(14) * ln_n.powf(2.5));
    326.0 * n * d * ln_n * (d * n / s.min(1.0)).log2() * shadow_bound(&b.with_sigma(inner))
}

/// Expected phase-2 pivots.
pub fn phase2_bound(b: &BoundInputs) -> f64 {
    let (n, d, s) = (b.n as f64, b.d as f64, b.sigma);
    let inner =
        s.powi(5).min(1.0) / (2f64.powi(23) * (d + 1.0).powf(5.5) * n.powi(14) * n.ln().powf(2.5));
    49.0 * (n * d / s.min(1.0)).log2() * shadow_bound(&b.with_sigma(inner)) + n
}

/// Both phases plus the two bridging pivots.
pub fn total_bound(b: &BoundInputs) -> f64 {
    phase1_bound(b) + phase2_bound(b) + 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub shadow: f64,
    pub kappa0: f64,
    pub phase1: f64,
    pub phase2: f64,
    pub total: f64,
}

impl BoundReport {
    pub fn new(b: &BoundInputs) -> Self {
        Self {
            n: b.n,
            d: b.d,
            sigma: b.sigma,
            shadow: shadow_bound(b),
            kappa0: kappa0(b),
            phase1: phase1_bound(b),
            phase2: phase2_bound(b),
            total: total_bound(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn inputs(n: usize, d: usize, s: f64) -> BoundInputs {
        BoundInputs::new(n, d, s).unwrap()
    }

    // Reference values evaluated with 50-digit arithmetic.
    const SHADOW_10_3_01: f64 = 15_899_943_059_999_994.704;
    const SHADOW_10_3_1: f64 = 3.820_620_728_847_094e15;
    const KAPPA0_10_3_1: f64 = 6.101_946_564_650_563e-10;
    const PHASE1_RATIO_1_OVER_01: f64 = 5.963_055_913_816_505e-25;
    const PHASE1_10_3_01: f64 = 8.153_365_969_142_687e177;
    const PHASE2_10_3_01: f64 = 4.469_753_657_601_43e193;

    #[test]
    fn reference_values() {
        assert!(rel(shadow_bound(&inputs(10, 3, 0.1)), SHADOW_10_3_01) < 1e-12);
        assert!(rel(shadow_bound(&inputs(10, 3, 1.0)), SHADOW_10_3_1) < 1e-12);
        assert!(rel(kappa0(&inputs(10, 3, 1.0)), KAPPA0_10_3_1) < 1e-12);
        let ratio = phase1_bound(&inputs(10, 3, 1.0)) / phase1_bound(&inputs(10, 3, 0.1));
        assert!(rel(ratio, PHASE1_RATIO_1_OVER_01) < 1e-10);
        assert!(rel(phase1_bound(&inputs(10, 3, 0.1)), PHASE1_10_3_01) < 1e-10);
        assert!(rel(phase2_bound(&inputs(10, 3, 0.1)), PHASE2_10_3_01) < 1e-10);
    }

    #[test]
    fn cap_makes_bound_flat() {
        let b = inputs(10, 3, 1.0);
        assert_eq!(shadow_bound(&b), shadow_bound(&inputs(10, 3, 5.0)));
    }

    #[test]
    fn kappa0_scaling() {
        let one = kappa0(&inputs(10, 3, 1.0));
        assert!(rel(kappa0(&inputs(10, 3, 0.5)), 0.25 * one) < 1e-15);
        for &(n, d, s) in &[(4, 3, 0.5), (10, 3, 1.0), (50, 7, 3.0)] {
            assert!(kappa0(&inputs(n, d, s)) < s);
        }
    }

    #[test]
    fn totals_are_finite_and_positive() {
        let b = inputs(10, 3, 0.1);
        for v in [phase1_bound(&b), phase2_bound(&b), total_bound(&b)] {
            assert!(v.is_finite() && v > 0.0);
        }
        assert_eq!(total_bound(&b), phase1_bound(&b) + phase2_bound(&b) + 2.0);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(
            BoundInputs::new(10, 2, 0.1),
            Err(DomainError::DimensionTooSmall(2))
        );
        assert_eq!(
            BoundInputs::new(3, 3, 0.1),
            Err(DomainError::TooFewConstraints { n: 3, d: 3 })
        );
        assert!(BoundInputs::new(10, 3, 0.0).is_err());
        assert!(BoundInputs::new(10, 3, f64::NAN).is_err());
    }

    #[test]
    fn monotone_in_each_argument() {
        let sigmas: Vec<f64> = (0..20).map(|k| 10f64.powf(-3.0 + 0.2 * k as f64)).collect();
        for w in sigmas.windows(2) {
            assert!(shadow_bound(&inputs(10, 3, w[1])) <= shadow_bound(&inputs(10, 3, w[0])));
        }
        assert!(shadow_bound(&inputs(11, 3, 0.1)) > shadow_bound(&inputs(10, 3, 0.1)));
        assert!(shadow_bound(&inputs(10, 4, 0.1)) > shadow_bound(&inputs(10, 3, 0.1)));
    }
}
