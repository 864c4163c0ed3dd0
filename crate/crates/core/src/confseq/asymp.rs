//! Asymptotic confidence sequence around the running mean of the scores.

use crate::numeric::Moments;
use crate::types::Interval;

pub const DEFAULT_RHO: f64 = 0.5;

/// Half-width
/// `sqrt( 2(Tσ̂²ρ² + 1)/(T²ρ²) · ln( sqrt(Tσ̂²ρ² + 1)/α ) )`.
pub fn asymp_radius(sigma2: f64, n: usize, rho: f64, alpha: f64) -> f64 {
    let t = n as f64;
    let u = t * sigma2 * rho * rho + 1.0;
    libm::sqrt(2.0 * u / (t * t * rho * rho) * libm::log(libm::sqrt(u) / alpha))
}

pub fn asymp_interval(mean: f64, sigma2: f64, n: usize, rho: f64, alpha: f64) -> Interval {
    let r = asymp_radius(sigma2, n, rho, alpha);
    Interval::new(mean - r, mean + r)
}

/// `ρ = sqrt((-2 ln α + ln(-2 ln α + 1)) / T)`, the approximate width
/// minimizer at time `T` for unit-variance scores.
pub fn rho_opt(alpha: f64, t_star: usize) -> f64 {
    let l = -2.0 * libm::log(alpha);
    libm::sqrt((l + libm::log(l + 1.0)) / t_star as f64)
}

/// Width minimizer for scores of variance `sigma2`. The radius depends on
/// `ρ` only through `ρ σ̂`, so the unit-variance optimum is divided by `σ̂`.
pub fn rho_opt_for_variance(alpha: f64, t_star: usize, sigma2: f64) -> f64 {
    rho_opt(alpha, t_star) / libm::sqrt(sigma2)
}

#[derive(Debug, Clone)]
pub struct AsympState {
    alpha: f64,
    rho: f64,
    moments: Moments,
}

impl AsympState {
    pub fn new(alpha: f64, rho: f64) -> Self {
        Self { alpha, rho, moments: Moments::new() }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn update(&mut self, h: f64) -> Interval {
        self.moments.push(h);
        self.interval()
    }

    pub fn interval(&self) -> Interval {
        if self.moments.count() == 0 {
            return Interval::UNBOUNDED;
        }
        asymp_interval(self.moments.mean(), self.moments.variance(), self.moments.count(), self.rho, self.alpha)
    }
}
