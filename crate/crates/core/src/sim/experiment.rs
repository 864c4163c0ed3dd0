//! The per-subject loop: assignment, outcome, score, and interval updates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::confseq::{AsympState, HedgedState, Method, PrpiState, RunningIntersection};
use crate::error::{Error, Result};
use crate::estimator::{truncated_score, EstimatorState};
use crate::policy::{sample_arm, Policy};
use crate::regression::{KnnRegressor, OutcomeModel, SplitRegressor};
use crate::rng::{seeded_rng, RandomSource};
use crate::types::{Arm, Interval, Observation, OutcomeRange, ScoreRecord};

use super::config::{ConfSeqConfig, ExperimentConfig, ModelConfig, ModelKind, PolicyKind};
use super::dgp::{Dgp, OracleModel};

/// RNG stream carrying contexts, assignments and outcomes of iteration `iter`.
pub fn data_stream(iter: u64) -> u64 {
    2 * iter
}

/// RNG stream carrying the fold allocation of iteration `iter`. Kept apart
/// from the data stream so a logged experiment can be replayed exactly.
pub fn fold_stream(iter: u64) -> u64 {
    2 * iter + 1
}

/// All enabled interval constructions over one score stream.
#[derive(Debug, Clone)]
pub struct IntervalEngine {
    alpha: f64,
    t_min: usize,
    methods: Vec<Method>,
    moments: EstimatorState,
    hedged: Option<(HedgedState, RunningIntersection)>,
    prpi: Option<(PrpiState, RunningIntersection)>,
    asymp: Option<(AsympState, RunningIntersection)>,
}

impl IntervalEngine {
    pub fn new(methods: &[Method], alpha: f64, t_min: usize, cs: &ConfSeqConfig) -> Self {
        let mut ordered: Vec<Method> = methods.to_vec();
        ordered.sort();
        ordered.dedup();
        let has = |m| ordered.contains(&m);
        Self {
            alpha,
            t_min,
            moments: EstimatorState::new(),
            hedged: has(Method::Hedged).then(|| (HedgedState::new(cs.hedged(alpha)), RunningIntersection::new(t_min))),
            prpi: has(Method::Prpi)
                .then(|| (PrpiState::with_cap(alpha, cs.lambda_cap), RunningIntersection::new(t_min))),
            asymp: has(Method::Asymp).then(|| (AsympState::new(alpha, cs.rho), RunningIntersection::new(t_min))),
            methods: ordered,
        }
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn hedged_gap_events(&self) -> usize {
        self.hedged.as_ref().map_or(0, |(s, _)| s.gap_events())
    }

    pub fn prpi_clamped_steps(&self) -> usize {
        self.prpi.as_ref().map_or(0, |(s, _)| s.clamped_steps())
    }

    /// Folds in the score of subject `t` and returns the reported interval
    /// of every method, on the rescaled effect scale. Before `t_min` every
    /// method reports the full parameter range.
    pub fn update(&mut self, t: usize, h: f64, k: f64) -> Vec<(Method, Interval)> {
        self.moments.update(h);
        let report = t >= self.t_min;
        let mut out = Vec::with_capacity(self.methods.len());
        for &m in &self.methods {
            let iv = match m {
                Method::Clt => match self.moments.clt_interval(self.alpha) {
                    Ok(iv) if report => iv,
                    _ => Interval::PARAMETER_RANGE,
                },
                Method::Hedged => {
                    let (s, run) = self.hedged.as_mut().expect("hedged enabled");
                    s.observe(h, k);
                    if report {
                        let raw = s.interval();
                        run.observe(t, raw)
                    } else {
                        Interval::PARAMETER_RANGE
                    }
                }
                Method::Prpi => {
                    let (s, run) = self.prpi.as_mut().expect("prpi enabled");
                    let raw = s.update(h, k);
                    run.observe(t, raw)
                }
                Method::Asymp => {
                    let (s, run) = self.asymp.as_mut().expect("asymp enabled");
                    let raw = s.update(h);
                    run.observe(t, raw)
                }
            };
            out.push((m, iv));
        }
        out
    }
}

/// One logged subject as it appears in an experiment stream: the raw
/// outcome and the propensity actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub arm: Arm,
    pub y: f64,
    pub pi1: f64,
    pub k: f64,
}

/// Everything recorded for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub row: StreamRow,
    pub score: ScoreRecord,
    /// Reported intervals in raw outcome units.
    pub intervals: Vec<(Method, Interval)>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum ScoreModel {
    Split(SplitRegressor<KnnRegressor>),
    Oracle(OracleModel),
}

impl ScoreModel {
    fn as_model(&self) -> &dyn OutcomeModel {
        match self {
            ScoreModel::Split(s) => s,
            ScoreModel::Oracle(o) => o,
        }
    }
}

/// Sequential inference over a logged stream: sample splitting, plug-in
/// regression, scoring, and interval updates. Used both by the simulator
/// and to replay externally collected data.
#[derive(Debug, Clone)]
pub struct InferenceStream {
    range: OutcomeRange,
    dim: usize,
    model: ScoreModel,
    folds: RandomSource,
    estimator: EstimatorState,
    engine: IntervalEngine,
    last_t: usize,
}

impl InferenceStream {
    /// `dgp` is only consulted for the oracle model.
    pub fn new(
        range: OutcomeRange,
        dim: usize,
        model: &ModelConfig,
        dgp: Option<Dgp>,
        engine: IntervalEngine,
        fold_rng: RandomSource,
    ) -> Result<Self> {
        let model = match model.kind {
            ModelKind::Knn => ScoreModel::Split(SplitRegressor::knn(model.k, dim, model.warmup)?),
            ModelKind::Oracle => {
                let dgp = dgp.ok_or_else(|| Error::Config("model.kind = oracle requires a dgp".into()))?;
                ScoreModel::Oracle(OracleModel::new(dgp)?)
            }
        };
        Ok(Self { range, dim, model, folds: fold_rng, estimator: EstimatorState::new(), engine, last_t: 0 })
    }

    pub fn model(&self) -> &dyn OutcomeModel {
        self.model.as_model()
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn engine(&self) -> &IntervalEngine {
        &self.engine
    }

    /// Validates one logged row and folds it in. Rows must arrive with
    /// `t = 1, 2, 3, ...`.
    pub fn ingest(&mut self, row: StreamRow) -> Result<StepRecord> {
        let t = row.t;
        if t != self.last_t + 1 {
            return Err(Error::DataValidation(format!(
                "row t={t}: time index must increase by one (previous t={})",
                self.last_t
            )));
        }
        if row.x.len() != self.dim {
            return Err(Error::DataValidation(format!(
                "row t={t}: expected {} context values, got {}",
                self.dim,
                row.x.len()
            )));
        }
        if row.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DataValidation(format!("row t={t}: non-finite context value")));
        }
        if !(row.k.is_finite() && row.k >= 2.0) {
            return Err(Error::DataValidation(format!("row t={t}: truncation level k={} must be >= 2", row.k)));
        }
        let lo = 1.0 / row.k;
        if !(row.pi1 >= lo && row.pi1 <= 1.0 - lo) {
            return Err(Error::DataValidation(format!(
                "row t={t}: pi1={} outside [1/k, 1-1/k] = [{lo}, {}]",
                row.pi1,
                1.0 - lo
            )));
        }
        let y = self.range.rescale(row.y).map_err(|e| Error::DataValidation(format!("row t={t}: {e}")))?;

        if let ScoreModel::Split(s) = &mut self.model {
            s.assign_fold(t, &mut self.folds)?;
        }
        let model = self.model.as_model();
        let f1 = model.predict_for_score(&row.x, Arm::Treatment, t).f_hat;
        let f0 = model.predict_for_score(&row.x, Arm::Control, t).f_hat;
        let h = truncated_score(y, row.arm, f1, f0, row.pi1, row.k)?;
        let rec = ScoreRecord { t, h, pi1: row.pi1, k: row.k, f1_hat: f1, f0_hat: f0 };
        self.estimator.record(rec);
        if let ScoreModel::Split(s) = &mut self.model {
            s.update(&Observation { t, x: row.x.clone(), arm: row.arm, y })?;
        }
        let intervals =
            self.engine.update(t, h, row.k).into_iter().map(|(m, iv)| (m, self.range.interval_to_raw(iv))).collect();
        self.last_t = t;
        Ok(StepRecord { row, score: rec, intervals })
    }
}

/// Complete record of one simulated experiment.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub iter: u64,
    /// True effect in raw units.
    pub theta0: f64,
    pub steps: Vec<StepRecord>,
    pub hedged_gap_events: usize,
    pub prpi_clamped_steps: usize,
}

fn new_stream(config: &ExperimentConfig, iter: u64) -> Result<InferenceStream> {
    let engine = IntervalEngine::new(&config.methods, config.alpha, config.t_min, &config.confseq);
    InferenceStream::new(
        config.dgp.outcome_range()?,
        config.dgp.dim(),
        &config.model,
        Some(config.dgp),
        engine,
        seeded_rng(config.seed, fold_stream(iter)),
    )
}

/// Runs replication `iter` of the configured experiment.
pub fn run_experiment(config: &ExperimentConfig, iter: u64) -> Result<Trajectory> {
    config.validate()?;
    let dgp = config.dgp;
    let mut stream = new_stream(config, iter)?;
    let mut rng = seeded_rng(config.seed, data_stream(iter));
    let policy: Policy = config.policy.policy(config.model.vfloor);
    let oracle = match config.policy.kind {
        PolicyKind::OracleAipw => Some(OracleModel::new(dgp)?),
        _ => None,
    };
    let schedule = config.policy.schedule;

    let mut steps = Vec::with_capacity(config.horizon);
    let mut x = vec![0.0; dgp.dim()];
    let mut k = 0.0;
    for t in 1..=config.horizon {
        dgp.draw_context(&mut rng, &mut x);
        k = schedule.next_k(k, t);
        let decision = match &oracle {
            Some(o) => policy.decide(&x, t, k, o),
            None => policy.decide(&x, t, k, stream.model()),
        };
        let arm = sample_arm(decision.pi1, &mut rng);
        let y = dgp.draw_outcome(&mut rng, arm, &x);
        steps.push(stream.ingest(StreamRow { t, x: x.clone(), arm, y, pi1: decision.pi1, k })?);
    }
    Ok(Trajectory {
        iter,
        theta0: dgp.ate(),
        steps,
        hedged_gap_events: stream.engine().hedged_gap_events(),
        prpi_clamped_steps: stream.engine().prpi_clamped_steps(),
    })
}

/// Re-runs the interval computations of replication `iter` on a logged
/// stream, without simulating assignments or outcomes.
pub fn replay<I>(
    range: OutcomeRange,
    dim: usize,
    config: &ExperimentConfig,
    iter: u64,
    rows: I,
) -> Result<Vec<StepRecord>>
where
    I: IntoIterator<Item = Result<StreamRow>>,
{
    let engine = IntervalEngine::new(&config.methods, config.alpha, config.t_min, &config.confseq);
    let mut stream = InferenceStream::new(
        range,
        dim,
        &config.model,
        Some(config.dgp),
        engine,
        seeded_rng(config.seed, fold_stream(iter)),
    )?;
    rows.into_iter().map(|row| stream.ingest(row?)).collect()
}
