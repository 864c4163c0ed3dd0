//! The adaptive AIPW score stream and the fixed-time CLT interval.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{normal_quantile, Moments};
use crate::types::{Arm, Interval, ScoreRecord};

/// Doubly robust score
/// `1[a=1](y - f̂1)/π1 - 1[a=0](y - f̂0)/(1 - π1) + f̂1 - f̂0`.
pub fn score(y: f64, arm: Arm, f1: f64, f0: f64, pi1: f64) -> Result<f64> {
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::Contract(format!("propensity must lie in (0, 1), got {pi1}")));
    }
    let ipw = match arm {
        Arm::Treatment => (y - f1) / pi1,
        Arm::Control => -(y - f0) / (1.0 - pi1),
    };
    Ok(ipw + f1 - f0)
}

/// Relative slack within which `|h|` may exceed `k` through rounding of
/// `1/π` at the truncation boundary.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// [`score`] for a propensity truncated at level `k`, guaranteed to satisfy
/// `|h| ≤ k`. Rounding overshoot is clamped; anything larger means the
/// inputs broke the contract (`y, f̂ ∈ [0, 1]`, `π ∈ [1/k, 1 - 1/k]`).
pub fn truncated_score(y: f64, arm: Arm, f1: f64, f0: f64, pi1: f64, k: f64) -> Result<f64> {
    let h = score(y, arm, f1, f0, pi1)?;
    if h.abs() <= k {
        Ok(h)
    } else if h.abs() <= k * (1.0 + ROUNDING_SLACK) {
        Ok(h.clamp(-k, k))
    } else {
        Err(Error::Contract(format!("score {h} exceeds truncation level {k}")))
    }
}

/// Running mean and `1/T` variance of the scores, plus the score history.
#[derive(Debug, Clone, Default)]
pub struct EstimatorState {
    moments: Moments,
    history: Vec<ScoreRecord>,
}

impl EstimatorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, h: f64) {
        self.moments.push(h);
    }

    /// Appends a full record and folds its score into the running moments.
    pub fn record(&mut self, rec: ScoreRecord) {
        self.update(rec.h);
        self.history.push(rec);
    }

    pub fn count(&self) -> usize {
        self.moments.count()
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean()
    }

    pub fn variance(&self) -> f64 {
        self.moments.variance()
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn history(&self) -> &[ScoreRecord] {
        &self.history
    }

    /// `h̄ ± z_{1-α/2} σ̂ / √T`.
    pub fn clt_interval(&self, alpha: f64) -> Result<Interval> {
        clt_interval(self.mean(), self.variance(), self.count(), alpha)
    }
}

pub fn clt_interval(mean: f64, variance: f64, n: usize, alpha: f64) -> Result<Interval> {
    if n < 2 {
        return Err(Error::NotReady { needed: 2, have: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let half = normal_quantile(1.0 - alpha / 2.0) * libm::sqrt(variance / n as f64);
    Ok(Interval::new(mean - half, mean + half))
}
