//! Monte Carlo reduction of replications into cumulative miscoverage,
//! cumulative power and mean-width curves.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::confseq::Method;
use crate::error::{Error, Result};

use super::experiment::Trajectory;

/// Per-method outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    /// First `s ≥ t_min` at which the true effect was excluded.
    pub first_miss: Option<usize>,
    /// First `s ≥ t_min` at which zero was excluded.
    pub first_reject: Option<usize>,
    /// Reported width at `t = 1..=T` (index `t - 1`).
    pub widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub iter: u64,
    pub methods: BTreeMap<Method, MethodSummary>,
}

/// Incremental builder used when replications arrive as per-step rows.
#[derive(Debug, Clone, Default)]
pub struct SummaryBuilder {
    t_min: usize,
    methods: BTreeMap<Method, MethodSummary>,
}

impl SummaryBuilder {
    pub fn new(t_min: usize) -> Self {
        Self { t_min, methods: BTreeMap::new() }
    }

    /// Adds the reported interval of `method` at time `t`. Rows of one method
    /// must arrive in increasing `t`.
    pub fn push(&mut self, method: Method, t: usize, width: f64, covered: bool, rejects_zero: bool) {
        let s = self.methods.entry(method).or_insert_with(|| MethodSummary {
            first_miss: None,
            first_reject: None,
            widths: Vec::new(),
        });
        if s.widths.len() < t {
            s.widths.resize(t, f64::NAN);
        }
        s.widths[t - 1] = width;
        if t >= self.t_min {
            if !covered && s.first_miss.is_none() {
                s.first_miss = Some(t);
            }
            if rejects_zero && s.first_reject.is_none() {
                s.first_reject = Some(t);
            }
        }
    }

    pub fn finish(self, iter: u64) -> IterationSummary {
        IterationSummary { iter, methods: self.methods }
    }
}

pub fn summarize(traj: &Trajectory, t_min: usize) -> IterationSummary {
    let mut b = SummaryBuilder::new(t_min);
    for step in &traj.steps {
        for (m, iv) in &step.intervals {
            b.push(*m, step.row.t, iv.width(), iv.contains(traj.theta0), !iv.contains(0.0));
        }
    }
    b.finish(traj.iter)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: usize,
    pub cum_miscoverage: f64,
    pub cum_power: f64,
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub n_iters: usize,
    pub curves: BTreeMap<Method, Vec<CurvePoint>>,
}

impl AggregateResult {
    pub fn at(&self, method: Method, t: usize) -> Option<&CurvePoint> {
        self.curves.get(&method)?.get(t.checked_sub(1)?)
    }

    pub fn last(&self, method: Method) -> Option<&CurvePoint> {
        self.curves.get(&method)?.last()
    }
}

/// Reduces replications to curves. The output does not depend on the order
/// of `summaries`: replications are reduced in `iter` order.
pub fn aggregate(summaries: &[IterationSummary]) -> Result<AggregateResult> {
    if summaries.is_empty() {
        return Err(Error::Contract("aggregate needs at least one replication".into()));
    }
    let mut order: Vec<&IterationSummary> = summaries.iter().collect();
    order.sort_by_key(|s| s.iter);
    let n = order.len();

    let mut curves = BTreeMap::new();
    let methods: Vec<Method> = order[0].methods.keys().copied().collect();
    for m in methods {
        let horizon = order.iter().filter_map(|s| s.methods.get(&m)).map(|s| s.widths.len()).max().unwrap_or(0);
        let mut misses = vec![0usize; horizon + 1];
        let mut rejects = vec![0usize; horizon + 1];
        let mut width_sum = vec![0.0f64; horizon];
        let mut width_n = vec![0usize; horizon];
        for s in order.iter().filter_map(|s| s.methods.get(&m)) {
            if let Some(t) = s.first_miss {
                misses[t] += 1;
            }
            if let Some(t) = s.first_reject {
                rejects[t] += 1;
            }
            for (i, w) in s.widths.iter().enumerate() {
                if !w.is_nan() {
                    width_sum[i] += w;
                    width_n[i] += 1;
                }
            }
        }
        let mut cum_miss = 0;
        let mut cum_rej = 0;
        let points = (1..=horizon)
            .map(|t| {
                cum_miss += misses[t];
                cum_rej += rejects[t];
                CurvePoint {
                    t,
                    cum_miscoverage: cum_miss as f64 / n as f64,
                    cum_power: cum_rej as f64 / n as f64,
                    mean_width: if width_n[t - 1] > 0 { width_sum[t - 1] / width_n[t - 1] as f64 } else { f64::NAN },
                }
            })
            .collect();
        curves.insert(m, points);
    }
    Ok(AggregateResult { n_iters: n, curves })
}

/// Median of the values (average of the two middle values for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}
