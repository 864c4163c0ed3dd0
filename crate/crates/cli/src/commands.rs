use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use seqate_core::rng::seeded_rng;
use seqate_core::sim::{
    aggregate as reduce, fold_stream, run_experiment, summarize, AggregateResult, InferenceStream, IntervalEngine,
    IterationSummary, SummaryBuilder,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format;

/// Replications simulated together before their output is flushed.
const CHUNK: usize = 32;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const STREAM_DIR: &str = "streams";

pub fn stream_path(out_dir: &Path, iter: u64) -> PathBuf {
    out_dir.join(STREAM_DIR).join(format!("stream_{iter}.csv"))
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub aggregate: AggregateResult,
    pub hedged_gap_events: usize,
    pub prpi_clamped_steps: usize,
}

struct IterOutput {
    summary: IterationSummary,
    trajectory: Vec<u8>,
    stream: Vec<u8>,
    gaps: usize,
    clamped: usize,
}

fn simulate_one(cfg: &RunConfig, iter: u64) -> CliResult<IterOutput> {
    let exp = &cfg.experiment;
    let traj = run_experiment(exp, iter)?;
    let summary = summarize(&traj, exp.t_min);
    let mut trajectory = Vec::new();
    if cfg.output.trajectory {
        let mut w = csv::Writer::from_writer(&mut trajectory);
        for step in &traj.steps {
            format::write_trajectory_step(&mut w, iter, step, Some(traj.theta0))?;
        }
        w.flush()?;
    }
    let mut stream = Vec::new();
    if cfg.output.streams {
        let mut w = csv::Writer::from_writer(&mut stream);
        w.write_record(format::stream_header(exp.dgp.dim()))?;
        for step in &traj.steps {
            format::write_stream_row(&mut w, &step.row)?;
        }
        w.flush()?;
    }
    Ok(IterOutput { summary, trajectory, stream, gaps: traj.hedged_gap_events, clamped: traj.prpi_clamped_steps })
}

/// Runs every replication and writes `trajectory.csv`, `aggregate.csv` and,
/// if enabled, one stream file per replication under `out_dir`.
pub fn simulate(cfg: &RunConfig, out_dir: &Path) -> CliResult<SimulateReport> {
    fs::create_dir_all(out_dir)?;
    if cfg.output.streams {
        fs::create_dir_all(out_dir.join(STREAM_DIR))?;
    }
    let mut traj_out = if cfg.output.trajectory {
        let mut w = BufWriter::new(File::create(out_dir.join(TRAJECTORY_FILE))?);
        let mut c = csv::Writer::from_writer(Vec::new());
        format::write_trajectory_header(&mut c)?;
        w.write_all(&c.into_inner().map_err(|e| CliError::Other(e.to_string()))?)?;
        Some(w)
    } else {
        None
    };

    let n = cfg.experiment.n_iters as u64;
    let mut summaries = Vec::with_capacity(n as usize);
    let (mut gaps, mut clamped) = (0, 0);
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK as u64).min(n);
        let outputs: Vec<CliResult<IterOutput>> = (start..end).into_par_iter().map(|i| simulate_one(cfg, i)).collect();
        for (i, out) in (start..end).zip(outputs) {
            let out = out?;
            if let Some(w) = traj_out.as_mut() {
                w.write_all(&out.trajectory)?;
            }
            if cfg.output.streams {
                fs::write(stream_path(out_dir, i), &out.stream)?;
            }
            gaps += out.gaps;
            clamped += out.clamped;
            summaries.push(out.summary);
        }
        start = end;
    }
    if let Some(mut w) = traj_out {
        w.flush()?;
    }
    let aggregate = reduce(&summaries)?;
    format::write_aggregate(BufWriter::new(File::create(out_dir.join(AGGREGATE_FILE))?), &aggregate)?;
    Ok(SimulateReport { aggregate, hedged_gap_events: gaps, prpi_clamped_steps: clamped })
}

pub fn summary_table(report: &SimulateReport) -> String {
    let mut s =
        format!("{:<8} {:>6} {:>16} {:>10} {:>12}\n", "method", "t", "cum_miscoverage", "cum_power", "mean_width");
    for (m, pts) in &report.aggregate.curves {
        if let Some(p) = pts.last() {
            s.push_str(&format!(
                "{:<8} {:>6} {:>16.4} {:>10.4} {:>12.6}\n",
                m.name(),
                p.t,
                p.cum_miscoverage,
                p.cum_power,
                p.mean_width
            ));
        }
    }
    s.push_str(&format!(
        "replications: {}  hedged gap events: {}  prpi clamped steps: {}\n",
        report.aggregate.n_iters, report.hedged_gap_events, report.prpi_clamped_steps
    ));
    s
}

/// Replays a logged stream and writes per-step intervals in the trajectory
/// layout. Each output row is written before the next input row is read.
pub fn infer(cfg: &RunConfig, stream: &Path, out: &Path, iter: u64) -> CliResult<usize> {
    let exp = &cfg.experiment;
    let file = File::open(stream).map_err(|e| CliError::Data(format!("cannot open {}: {e}", stream.display())))?;
    let reader = format::StreamReader::new(BufReader::new(file))?;
    let range = cfg.outcome_range()?;
    // The true effect is only known when the stream comes from the configured process.
    let theta0 = cfg.data_range.is_none().then(|| exp.dgp.ate());
    let engine = IntervalEngine::new(&exp.methods, exp.alpha, exp.t_min, &exp.confseq);
    let mut inference = InferenceStream::new(
        range,
        reader.dim(),
        &exp.model,
        Some(exp.dgp),
        engine,
        seeded_rng(exp.seed, fold_stream(iter)),
    )?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
    format::write_trajectory_header(&mut w)?;
    let mut n = 0;
    for row in reader {
        let step = inference.ingest(row?)?;
        format::write_trajectory_step(&mut w, iter, &step, theta0)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Reduces trajectory files matching `pattern` into aggregate curves.
pub fn aggregate(pattern: &str, out: &Path, t_min: usize) -> CliResult<AggregateResult> {
    let paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::Config(format!("trajectory glob: {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Other(e.to_string()))?;
    if paths.is_empty() {
        return Err(CliError::Data(format!("no trajectory files match '{pattern}'")));
    }
    let mut by_iter: BTreeMap<u64, Vec<format::TrajectoryRow>> = BTreeMap::new();
    for p in &paths {
        let rows = format::read_trajectory(BufReader::new(File::open(p)?), &p.display().to_string())?;
        for r in rows {
            by_iter.entry(r.iter).or_default().push(r);
        }
    }
    let summaries: Vec<IterationSummary> = by_iter
        .into_iter()
        .map(|(iter, mut rows)| {
            rows.sort_by_key(|r| r.t);
            let mut b = SummaryBuilder::new(t_min);
            for r in rows {
                // Unknown coverage counts as covered.
                b.push(r.method, r.t, r.width, r.covered.unwrap_or(true), r.rejects_zero);
            }
            b.finish(iter)
        })
        .collect();
    let agg = reduce(&summaries)?;
    format::write_aggregate(BufWriter::new(File::create(out)?), &agg)?;
    Ok(agg)
}
