//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! dgp = "bernoulli"          # bernoulli | bounded | truncation_study
//! theta0 = 0.1               # bounded only
//! horizon = 2000
//! n_iters = 200
//! alpha = 0.05
//! seed = 7
//! t_min = 50
//! methods = ["clt", "hedged", "prpi", "asymp"]
//!
//! [policy]
//! kind = "a2ipw"             # a2ipw | oracle | fixed
//! p = 0.5                    # fixed only
//! warmup = 100
//!
//! [policy.schedule]
//! kind = "geometric"         # geometric (k1, decay) | constant (k or pi_min)
//! k1 = 2.0
//! decay = 0.999
//!
//! [model]
//! kind = "knn"               # knn | oracle
//! k = 10
//! warmup = 100
//! vfloor = 0.01
//!
//! [confseq]
//! grid_points = 1000
//! mix = 0.5
//! lambda_cap = 0.5
//! margin = 1e-6
//! refine = true
//! rho = 0.5
//!
//! [output]
//! trajectory = true
//! streams = false
//!
//! [data]                     # infer only; defaults to the dgp's range
//! outcome_lo = 0.0
//! outcome_hi = 1.0
//! ```

use std::path::Path;

use serde::Deserialize;

use seqate_core::confseq::Method;
use seqate_core::sim::{Dgp, ExperimentConfig, ModelKind, PolicyKind};
use seqate_core::types::{OutcomeRange, TruncationSchedule};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<RawExperiment>,
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    confseq: RawConfSeq,
    #[serde(default)]
    output: RawOutput,
    data: Option<RawData>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    dgp: Option<String>,
    theta0: Option<f64>,
    horizon: Option<usize>,
    n_iters: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    t_min: Option<usize>,
    methods: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: Option<String>,
    p: Option<f64>,
    warmup: Option<usize>,
    schedule: Option<RawSchedule>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: Option<String>,
    k1: Option<f64>,
    decay: Option<f64>,
    k: Option<f64>,
    pi_min: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<String>,
    k: Option<usize>,
    warmup: Option<usize>,
    vfloor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfSeq {
    grid_points: Option<usize>,
    mix: Option<f64>,
    lambda_cap: Option<f64>,
    margin: Option<f64>,
    refine: Option<bool>,
    rho: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trajectory: Option<bool>,
    streams: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    outcome_lo: Option<f64>,
    outcome_hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputConfig {
    pub trajectory: bool,
    pub streams: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
    /// Outcome range for replayed streams, if set explicitly.
    pub data_range: Option<OutcomeRange>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    pub methods: Option<String>,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("{key}: missing required key"))
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

pub fn parse_methods(key: &str, names: &[String]) -> CliResult<Vec<Method>> {
    names.iter().map(|n| Method::parse(n.trim()).ok_or_else(|| invalid(key, format!("unknown method '{n}'")))).collect()
}

fn parse_dgp(e: &RawExperiment) -> CliResult<Dgp> {
    let name = e.dgp.as_deref().ok_or_else(|| missing("experiment.dgp"))?;
    let dgp = match name {
        "bernoulli" => Dgp::Bernoulli,
        "bounded" => Dgp::Bounded { theta0: e.theta0.unwrap_or(0.1) },
        "truncation_study" => Dgp::TruncationStudy,
        other => return Err(invalid("experiment.dgp", format!("unknown generating process '{other}'"))),
    };
    if e.theta0.is_some() && !matches!(dgp, Dgp::Bounded { .. }) {
        return Err(invalid("experiment.theta0", "only the bounded process takes theta0"));
    }
    Ok(dgp)
}

fn parse_schedule(raw: &RawSchedule) -> CliResult<TruncationSchedule> {
    let key = "policy.schedule";
    let s = match raw.kind.as_deref().unwrap_or("geometric") {
        "geometric" => TruncationSchedule::geometric(raw.k1.unwrap_or(2.0), raw.decay.unwrap_or(0.999)),
        "constant" => match (raw.k, raw.pi_min) {
            (Some(k), None) => TruncationSchedule::constant(k),
            (None, Some(p)) => TruncationSchedule::from_min_propensity(p),
            (None, None) => return Err(missing("policy.schedule.pi_min")),
            (Some(_), Some(_)) => return Err(invalid(key, "give either k or pi_min, not both")),
        },
        other => return Err(invalid("policy.schedule.kind", format!("unknown schedule '{other}'"))),
    };
    s.map_err(|e| invalid(key, e))
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let e = raw.experiment.ok_or_else(|| missing("experiment"))?;
        let dgp = parse_dgp(&e)?;
        let mut cfg = ExperimentConfig::new(dgp);
        if let Some(v) = e.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = e.n_iters {
            cfg.n_iters = v;
        }
        if let Some(v) = e.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = e.seed {
            cfg.seed = v;
        }
        if let Some(v) = e.t_min {
            cfg.t_min = v;
        }
        if let Some(m) = &e.methods {
            cfg.methods = parse_methods("experiment.methods", m)?;
        }

        let p = &raw.policy;
        cfg.policy.kind = match p.kind.as_deref().unwrap_or("a2ipw") {
            "a2ipw" => PolicyKind::A2ipw,
            "oracle" => PolicyKind::OracleAipw,
            "fixed" => PolicyKind::Fixed(p.p.ok_or_else(|| missing("policy.p"))?),
            other => return Err(invalid("policy.kind", format!("unknown policy '{other}'"))),
        };
        if let Some(v) = p.warmup {
            cfg.policy.warmup = v;
        }
        if let Some(s) = &p.schedule {
            cfg.policy.schedule = parse_schedule(s)?;
        }

        let m = &raw.model;
        cfg.model.kind = match m.kind.as_deref().unwrap_or("knn") {
            "knn" => ModelKind::Knn,
            "oracle" => ModelKind::Oracle,
            other => return Err(invalid("model.kind", format!("unknown model '{other}'"))),
        };
        if let Some(v) = m.k {
            cfg.model.k = v;
        }
        if let Some(v) = m.warmup {
            cfg.model.warmup = v;
        }
        if let Some(v) = m.vfloor {
            cfg.model.vfloor = v;
        }

        let c = &raw.confseq;
        let cs = &mut cfg.confseq;
        if let Some(v) = c.grid_points {
            cs.grid_points = v;
        }
        if let Some(v) = c.mix {
            cs.mix = v;
        }
        if let Some(v) = c.lambda_cap {
            cs.lambda_cap = v;
        }
        if let Some(v) = c.margin {
            cs.margin = v;
        }
        if let Some(v) = c.refine {
            cs.refine = v;
        }
        if let Some(v) = c.rho {
            cs.rho = v;
        }

        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = overrides.iters {
            cfg.n_iters = v;
        }
        if let Some(list) = &overrides.methods {
            let names: Vec<String> = list.split(',').map(str::to_string).collect();
            cfg.methods = parse_methods("--methods", &names)?;
        }
        cfg.validate()?;

        let data_range = match raw.data {
            None => None,
            Some(d) => {
                let lo = d.outcome_lo.ok_or_else(|| missing("data.outcome_lo"))?;
                let hi = d.outcome_hi.ok_or_else(|| missing("data.outcome_hi"))?;
                Some(OutcomeRange::new(lo, hi).map_err(|e| invalid("data", e))?)
            }
        };
        let output = OutputConfig {
            trajectory: raw.output.trajectory.unwrap_or(true),
            streams: raw.output.streams.unwrap_or(false),
        };
        Ok(Self { experiment: cfg, output, data_range })
    }

    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Outcome range used to rescale replayed outcomes.
    pub fn outcome_range(&self) -> CliResult<OutcomeRange> {
        match self.data_range {
            Some(r) => Ok(r),
            None => Ok(self.experiment.dgp.outcome_range()?),
        }
    }
}
