//! Synthetic data-generating processes.
//!
//! "logit" in the published generating equations is read as the logistic
//! sigmoid `1/(1+e^{-z})`, the only reading that yields probabilities.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::numeric::sigmoid;
use crate::regression::{OutcomeModel, Prediction};
use crate::rng::RandomSource;
use crate::types::{Arm, OutcomeRange};

pub const CONTEXT_DIM: usize = 3;
const BETA_NORMAL: [f64; 3] = [-2.0, -3.0, 5.0];
const BETA_BOUNDED: [f64; 3] = [-0.04, -0.01, 0.05];
const BOUNDED_BASE: f64 = 0.4;
const BOUNDED_CONTROL_NOISE: f64 = 0.05;
const BOUNDED_TREATED_SCALE: f64 = 4.5;

fn dot(x: &[f64], beta: &[f64; 3]) -> f64 {
    x.iter().zip(beta).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    /// `x ~ N(0, I₃)`, `y ~ Bernoulli(0.9 σ(0.5 + xβ) + 0.1 a)`; ATE 0.1.
    Bernoulli,
    /// `x ~ U(0,1)³`, `y = 0.4 + xβ + θ₀ a + ε_a` with
    /// `ε₀ ~ U(-0.05, 0.05)` and `ε₁ ~ U(±4.5 xβ)`.
    Bounded { theta0: f64 },
    /// `x ~ N(0, I₃)`, `y ~ Bernoulli(0.1 σ(0.5 + xβ) + 0.4 a)`; ATE 0.4.
    TruncationStudy,
}

impl Dgp {
    pub fn name(&self) -> &'static str {
        match self {
            Dgp::Bernoulli => "bernoulli",
            Dgp::Bounded { .. } => "bounded",
            Dgp::TruncationStudy => "truncation_study",
        }
    }

    pub fn dim(&self) -> usize {
        CONTEXT_DIM
    }

    /// True average treatment effect in raw outcome units.
    pub fn ate(&self) -> f64 {
        match *self {
            Dgp::Bernoulli => 0.1,
            Dgp::Bounded { theta0 } => theta0,
            Dgp::TruncationStudy => 0.4,
        }
    }

    /// Outcome support implied by the parameters.
    pub fn outcome_range(&self) -> Result<OutcomeRange> {
        match *self {
            Dgp::Bernoulli | Dgp::TruncationStudy => Ok(OutcomeRange::UNIT),
            Dgp::Bounded { theta0 } => {
                // Extremes of xβ over the unit cube; the treated noise bound
                // xβ ± 4.5|xβ| is extremal at one of them.
                let xb_max = BETA_BOUNDED.iter().filter(|b| **b > 0.0).sum::<f64>();
                let xb_min = BETA_BOUNDED.iter().filter(|b| **b < 0.0).sum::<f64>();
                let ctrl_lo = BOUNDED_BASE + xb_min - BOUNDED_CONTROL_NOISE;
                let ctrl_hi = BOUNDED_BASE + xb_max + BOUNDED_CONTROL_NOISE;
                let spread = |xb: f64| xb.abs() * BOUNDED_TREATED_SCALE;
                let trt_lo = BOUNDED_BASE + theta0 + (xb_min - spread(xb_min)).min(xb_max - spread(xb_max));
                let trt_hi = BOUNDED_BASE + theta0 + (xb_max + spread(xb_max)).max(xb_min + spread(xb_min));
                OutcomeRange::new(ctrl_lo.min(trt_lo), ctrl_hi.max(trt_hi))
            }
        }
    }

    pub fn draw_context(&self, rng: &mut RandomSource, x: &mut [f64]) {
        match self {
            Dgp::Bernoulli | Dgp::TruncationStudy => {
                for v in x.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            Dgp::Bounded { .. } => {
                for v in x.iter_mut() {
                    *v = rng.random::<f64>();
                }
            }
        }
    }

    /// `E[y | a, x]` in raw units.
    pub fn mean(&self, arm: Arm, x: &[f64]) -> f64 {
        let a = f64::from(arm as u8);
        match *self {
            Dgp::Bernoulli => 0.9 * sigmoid(0.5 + dot(x, &BETA_NORMAL)) + 0.1 * a,
            Dgp::TruncationStudy => 0.1 * sigmoid(0.5 + dot(x, &BETA_NORMAL)) + 0.4 * a,
            Dgp::Bounded { theta0 } => BOUNDED_BASE + dot(x, &BETA_BOUNDED) + theta0 * a,
        }
    }

    /// `Var(y | a, x)` in raw units.
    pub fn variance(&self, arm: Arm, x: &[f64]) -> f64 {
        match *self {
            Dgp::Bernoulli | Dgp::TruncationStudy => {
                let p = self.mean(arm, x);
                p * (1.0 - p)
            }
            Dgp::Bounded { .. } => {
                let width = match arm {
                    Arm::Control => 2.0 * BOUNDED_CONTROL_NOISE,
                    Arm::Treatment => 2.0 * BOUNDED_TREATED_SCALE * dot(x, &BETA_BOUNDED).abs(),
                };
                width * width / 12.0
            }
        }
    }

    /// Draws a raw outcome for arm `arm` at context `x`.
    pub fn draw_outcome(&self, rng: &mut RandomSource, arm: Arm, x: &[f64]) -> f64 {
        match *self {
            Dgp::Bernoulli | Dgp::TruncationStudy => {
                let p = self.mean(arm, x);
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Dgp::Bounded { .. } => {
                let half = match arm {
                    Arm::Control => BOUNDED_CONTROL_NOISE,
                    // Endpoints ±4.5 xβ, sorted so that lo ≤ hi.
                    Arm::Treatment => BOUNDED_TREATED_SCALE * dot(x, &BETA_BOUNDED).abs(),
                };
                let u: f64 = rng.random();
                self.mean(arm, x) + (2.0 * u - 1.0) * half
            }
        }
    }
}

/// Exact outcome moments from the generating process, on the rescaled
/// `[0, 1]` scale.
#[derive(Debug, Clone, Copy)]
pub struct OracleModel {
    dgp: Dgp,
    range: OutcomeRange,
}

impl OracleModel {
    pub fn new(dgp: Dgp) -> Result<Self> {
        Ok(Self { dgp, range: dgp.outcome_range()? })
    }

    pub fn predict(&self, x: &[f64], arm: Arm) -> Prediction {
        let span = self.range.span();
        let f = (self.dgp.mean(arm, x) - self.range.lo()) / span;
        let v = self.dgp.variance(arm, x) / (span * span);
        Prediction { f_hat: f, e_hat: f * f + v }.clamped()
    }
}

impl OutcomeModel for OracleModel {
    fn predict_for_score(&self, x: &[f64], arm: Arm, _t: usize) -> Prediction {
        self.predict(x, arm)
    }

    fn predict_for_policy(&self, x: &[f64], arm: Arm, _t: usize) -> Prediction {
        self.predict(x, arm)
    }
}
