use alloc::format;
use alloc::vec::Vec;

use crate::confseq::{HedgedConfig, Method, DEFAULT_LAMBDA_CAP, DEFAULT_RHO, DEFAULT_T_MIN};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::regression::{DEFAULT_KNN_K, DEFAULT_VFLOOR, DEFAULT_WARMUP};
use crate::types::TruncationSchedule;

use super::dgp::Dgp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Plug-in variance-optimal policy driven by the fitted outcome models.
    A2ipw,
    /// Variance-optimal policy computed from the true conditional variances.
    OracleAipw,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub warmup: usize,
    pub schedule: TruncationSchedule,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::A2ipw,
            warmup: DEFAULT_WARMUP,
            schedule: TruncationSchedule::geometric(2.0, 0.999).expect("valid default schedule"),
        }
    }
}

impl PolicyConfig {
    pub fn policy(&self, vfloor: f64) -> Policy {
        match self.kind {
            PolicyKind::A2ipw => Policy::Adaptive { warmup: self.warmup, vfloor },
            // Exact variances are available from the first subject; only a
            // numerical floor is kept.
            PolicyKind::OracleAipw => Policy::Adaptive { warmup: 0, vfloor: f64::MIN_POSITIVE },
            PolicyKind::Fixed(p) => Policy::Fixed(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Knn,
    /// Exact conditional means from the generating process.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub k: usize,
    pub warmup: usize,
    pub vfloor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::Knn, k: DEFAULT_KNN_K, warmup: DEFAULT_WARMUP, vfloor: DEFAULT_VFLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfSeqConfig {
    pub grid_points: usize,
    pub mix: f64,
    pub lambda_cap: f64,
    pub margin: f64,
    pub refine: bool,
    pub rho: f64,
}

impl Default for ConfSeqConfig {
    fn default() -> Self {
        let h = HedgedConfig::new(0.05);
        Self {
            grid_points: h.grid_points,
            mix: h.mix,
            lambda_cap: DEFAULT_LAMBDA_CAP,
            margin: h.margin,
            refine: h.refine,
            rho: DEFAULT_RHO,
        }
    }
}

impl ConfSeqConfig {
    pub fn hedged(&self, alpha: f64) -> HedgedConfig {
        HedgedConfig {
            alpha,
            grid_points: self.grid_points,
            mix: self.mix,
            cap: self.lambda_cap,
            margin: self.margin,
            refine: self.refine,
        }
    }
}

/// Everything needed to run (and replay) a simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dgp: Dgp,
    pub horizon: usize,
    pub n_iters: usize,
    pub alpha: f64,
    pub seed: u64,
    pub t_min: usize,
    pub methods: Vec<Method>,
    pub policy: PolicyConfig,
    pub model: ModelConfig,
    pub confseq: ConfSeqConfig,
}

impl ExperimentConfig {
    pub fn new(dgp: Dgp) -> Self {
        Self {
            dgp,
            horizon: 5000,
            n_iters: 1000,
            alpha: 0.05,
            seed: 0,
            t_min: DEFAULT_T_MIN,
            methods: Method::ALL.to_vec(),
            policy: PolicyConfig::default(),
            model: ModelConfig::default(),
            confseq: ConfSeqConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::Config(format!("{key}: {msg}")));
        if self.horizon == 0 {
            return bad("experiment.horizon", "must be positive");
        }
        if self.n_iters == 0 {
            return bad("experiment.n_iters", "must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("experiment.alpha", "must lie in (0, 1)");
        }
        if self.t_min == 0 {
            return bad("experiment.t_min", "must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("experiment.methods", "at least one method is required");
        }
        if let PolicyKind::Fixed(p) = self.policy.kind {
            if !(p > 0.0 && p < 1.0) {
                return bad("policy.p", "must lie in (0, 1)");
            }
        }
        if self.model.k == 0 {
            return bad("model.k", "must be at least 1");
        }
        if !(self.model.vfloor > 0.0) {
            return bad("model.vfloor", "must be positive");
        }
        if self.confseq.grid_points < 2 {
            return bad("confseq.grid_points", "must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.confseq.mix) {
            return bad("confseq.mix", "must lie in [0, 1]");
        }
        if !(self.confseq.lambda_cap > 0.0 && self.confseq.lambda_cap < 1.0) {
            return bad("confseq.lambda_cap", "must lie in (0, 1)");
        }
        if !(self.confseq.margin > 0.0 && self.confseq.margin < 1.0) {
            return bad("confseq.margin", "must lie in (0, 1)");
        }
        if !(self.confseq.rho > 0.0) {
            return bad("confseq.rho", "must be positive");
        }
        if let Dgp::Bounded { theta0 } = self.dgp {
            if !theta0.is_finite() {
                return bad("experiment.theta0", "must be finite");
            }
        }
        Ok(())
    }
}
