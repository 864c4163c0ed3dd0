//! Predictable plug-in empirical-Bernstein confidence sequence.
//!
//! A lower bound comes from inverting the test supermartingale
//!
//! ```text
//! M_T(θ) = exp{ Σ λ_t (ξ_t - θ/(k_t+1)) - Σ (ξ_t - ξ̂_{t-1})² ψ_E(λ_t) },   ξ_t = h_t/(k_t+1)
//! ```
//!
//! at level `2/α`; the upper bound is the same construction applied to the
//! mirrored stream `-h_t`. The two one-sided bounds share the error budget
//! through a union bound.

use crate::numeric::KahanSum;
use crate::types::Interval;

use super::{lambda_prpi, psi_e_unchecked, DEFAULT_LAMBDA_CAP};

/// Prior guess for the variance of the scaled scores.
pub const PRIOR_VARIANCE: f64 = 0.25;

/// Lowest admissible value of `ξ_t - ξ̂_{t-1}`; the boundary value `-1`
/// is only reachable at the extreme score `h_t = -k_t`.
const MIN_DEVIATION: f64 = -1.0 + 1e-9;

/// One-sided (lower) bound for the mean of `h`.
#[derive(Debug, Clone)]
pub struct PrpiSide {
    alpha: f64,
    cap: f64,
    log_threshold: f64,
    t: usize,
    sum_xi: KahanSum,
    var_num: KahanSum,
    weighted_xi: KahanSum,
    weight: KahanSum,
    penalty: KahanSum,
    clamped: usize,
}

impl PrpiSide {
    /// `alpha` is the two-sided level; the side is inverted at `2/α`.
    pub fn new(alpha: f64, cap: f64) -> Self {
        let mut var_num = KahanSum::new();
        var_num.add(PRIOR_VARIANCE);
        Self {
            alpha,
            cap,
            log_threshold: libm::log(2.0 / alpha),
            t: 0,
            sum_xi: KahanSum::new(),
            var_num,
            weighted_xi: KahanSum::new(),
            weight: KahanSum::new(),
            penalty: KahanSum::new(),
            clamped: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.t
    }

    /// Number of steps where `ξ_t - ξ̂_{t-1}` sat on its `-1` boundary.
    pub fn clamped_steps(&self) -> usize {
        self.clamped
    }

    /// `σ̂²_t = (σ₀² + Σ_{i≤t} (ξ_i - ξ̄_i)²) / (t + 1)`.
    pub fn sigma2(&self) -> f64 {
        self.var_num.value() / (self.t + 1) as f64
    }

    /// Folds in one score. `h` must satisfy `|h| ≤ k`.
    pub fn update(&mut self, h: f64, k: f64) {
        let scale = 1.0 / (k + 1.0);
        let xi = h * scale;
        let xi_pred = if self.t == 0 { 0.0 } else { (self.sum_xi.value() / self.t as f64).min(scale) };
        let lambda = lambda_prpi(self.t + 1, self.sigma2(), self.alpha, self.cap);

        let mut dev = xi - xi_pred;
        if dev < MIN_DEVIATION {
            dev = MIN_DEVIATION;
            self.clamped += 1;
        }
        self.weighted_xi.add(lambda * xi);
        self.weight.add(lambda * scale);
        self.penalty.add(dev * dev * psi_e_unchecked(lambda));

        self.t += 1;
        self.sum_xi.add(xi);
        let xi_bar = (self.sum_xi.value() / self.t as f64).min(scale);
        self.var_num.add((xi - xi_bar) * (xi - xi_bar));
    }

    /// `Σλξ / Σλ/(k+1)`; zero before any data.
    pub fn center(&self) -> f64 {
        let d = self.weight.value();
        if d > 0.0 {
            self.weighted_xi.value() / d
        } else {
            0.0
        }
    }

    /// `(ln(2/α) + Σ (ξ - ξ̂)² ψ_E(λ)) / Σλ/(k+1)`.
    pub fn radius(&self) -> f64 {
        let d = self.weight.value();
        if d > 0.0 {
            (self.log_threshold + self.penalty.value()) / d
        } else {
            f64::INFINITY
        }
    }

    pub fn bound(&self) -> f64 {
        self.center() - self.radius()
    }
}

/// Two-sided PrPI confidence sequence (raw, not yet intersected).
#[derive(Debug, Clone)]
pub struct PrpiState {
    lower: PrpiSide,
    upper: PrpiSide,
}

impl PrpiState {
    pub fn new(alpha: f64) -> Self {
        Self::with_cap(alpha, DEFAULT_LAMBDA_CAP)
    }

    pub fn with_cap(alpha: f64, cap: f64) -> Self {
        Self { lower: PrpiSide::new(alpha, cap), upper: PrpiSide::new(alpha, cap) }
    }

    pub fn update(&mut self, h: f64, k: f64) -> Interval {
        self.lower.update(h, k);
        self.upper.update(-h, k);
        self.interval()
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lower.bound(), -self.upper.bound())
    }

    pub fn lower_side(&self) -> &PrpiSide {
        &self.lower
    }

    pub fn upper_side(&self) -> &PrpiSide {
        &self.upper
    }

    pub fn clamped_steps(&self) -> usize {
        self.lower.clamped + self.upper.clamped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn first_step_at_zero_is_symmetric() {
        let mut s = PrpiState::new(0.05);
        let iv = s.update(0.0, 2.0);
        assert!(iv.lower.is_finite() && iv.upper.is_finite());
        assert!((iv.lower + iv.upper).abs() < 1e-15);
        assert!(iv.lower < 0.0);
    }

    #[test]
    fn width_shrinks_on_bernoulli_stream() {
        let mut r = seeded_rng(17, 0);
        let mut s = PrpiState::new(0.05);
        let mut w500 = 0.0;
        for t in 1..=5000 {
            let y = f64::from(u8::from(r.random::<f64>() < 0.3));
            let iv = s.update(2.0 * y - 0.5, 2.0);
            if t == 500 {
                w500 = iv.width();
            }
        }
        assert!(s.interval().width() < w500);
        assert!(s.interval().contains(0.1));
    }

    #[test]
    fn extreme_negative_score_is_clamped_not_rejected() {
        let mut side = PrpiSide::new(0.05, 0.5);
        for _ in 0..5 {
            side.update(2.0, 2.0);
        }
        side.update(-2.0, 2.0);
        assert_eq!(side.clamped_steps(), 1);
        assert!(side.bound().is_finite());
    }

    #[test]
    fn psi_terms_are_nonnegative_and_weights_grow() {
        let mut r = seeded_rng(2, 2);
        let mut side = PrpiSide::new(0.05, 0.5);
        let mut prev_w = 0.0;
        for _ in 0..2000 {
            let k = 2.0 + 10.0 * r.random::<f64>();
            side.update((2.0 * r.random::<f64>() - 1.0) * k, k);
            let w = side.weight.value();
            assert!(w > prev_w);
            prev_w = w;
            assert!(side.penalty.value() >= 0.0);
        }
    }
}
