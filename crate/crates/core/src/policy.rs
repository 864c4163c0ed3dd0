//! Treatment-assignment policies and propensity truncation.

use alloc::format;

use rand::Rng;

use crate::error::{Error, Result};
use crate::regression::{OutcomeModel, DEFAULT_VFLOOR, DEFAULT_WARMUP};
use crate::rng::RandomSource;
use crate::types::Arm;

/// One assignment decision: the untruncated and truncated probability of
/// treatment and the truncation level in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDecision {
    pub pi1_raw: f64,
    pub pi1: f64,
    pub k: f64,
}

/// Variance-optimal treatment probability `√v1 / (√v1 + √v0)`.
pub fn aipw_policy(v1: f64, v0: f64) -> Result<f64> {
    if !(v1 > 0.0 && v0 > 0.0) {
        return Err(Error::Contract(format!("variances must be positive, got v1={v1}, v0={v0}")));
    }
    let s1 = libm::sqrt(v1);
    let s0 = libm::sqrt(v0);
    Ok(s1 / (s1 + s0))
}

/// Clamps a propensity into `[1/k, 1 - 1/k]`.
pub fn truncate(pi_raw: f64, k: f64) -> Result<f64> {
    if !(k >= 2.0) {
        return Err(Error::Config(format!("truncation level k must be >= 2, got {k}")));
    }
    Ok(clamp_propensity(pi_raw, k))
}

fn clamp_propensity(pi_raw: f64, k: f64) -> f64 {
    let lo = 1.0 / k;
    pi_raw.max(lo).min(1.0 - lo)
}

pub fn sample_arm(pi1: f64, rng: &mut RandomSource) -> Arm {
    if rng.random::<f64>() < pi1 {
        Arm::Treatment
    } else {
        Arm::Control
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Plug-in estimate of the variance-optimal policy. During the first
    /// `warmup` subjects both arms are equally likely.
    Adaptive { warmup: usize, vfloor: f64 },
    /// Constant treatment probability (still truncated).
    Fixed(f64),
}

impl Default for Policy {
    fn default() -> Self {
        Policy::Adaptive { warmup: DEFAULT_WARMUP, vfloor: DEFAULT_VFLOOR }
    }
}

impl Policy {
    /// Treatment probability for subject `t` with context `x` under
    /// truncation level `k`. `model` supplies the policy-side predictions.
    pub fn decide<M: OutcomeModel + ?Sized>(&self, x: &[f64], t: usize, k: f64, model: &M) -> PolicyDecision {
        let pi1_raw = match *self {
            Policy::Fixed(p) => p,
            Policy::Adaptive { warmup, .. } if t <= warmup => 0.5,
            Policy::Adaptive { vfloor, .. } => {
                let v1 = model.predict_for_policy(x, Arm::Treatment, t).variance(vfloor);
                let v0 = model.predict_for_policy(x, Arm::Control, t).variance(vfloor);
                aipw_policy(v1, v0).expect("floored variances are positive")
            }
        };
        PolicyDecision { pi1_raw, pi1: clamp_propensity(pi1_raw, k), k }
    }
}
