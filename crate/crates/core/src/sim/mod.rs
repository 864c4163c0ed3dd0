//! Simulation harness: generating processes, the experiment loop, and the
//! Monte Carlo reduction of replications.

pub mod aggregate;
pub mod config;
pub mod dgp;
pub mod experiment;

pub use aggregate::{aggregate, median, summarize, AggregateResult, CurvePoint, IterationSummary, SummaryBuilder};
pub use config::{ConfSeqConfig, ExperimentConfig, ModelConfig, ModelKind, PolicyConfig, PolicyKind};
pub use dgp::{Dgp, OracleModel};
pub use experiment::{
    data_stream, fold_stream, replay, run_experiment, InferenceStream, IntervalEngine, StepRecord, StreamRow,
    Trajectory,
};
