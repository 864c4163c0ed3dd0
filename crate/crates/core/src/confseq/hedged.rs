//! Hedged betting confidence sequence, inverted on a grid of candidate
//! effects.
//!
//! For each candidate `θ'` two gamblers bet on the sign of `h_t - θ'`:
//!
//! ```text
//! K⁺_T(θ') = Π (1 + λ⁺_t(θ') (h_t - θ'))
//! K⁻_T(θ') = Π (1 - λ⁻_t(θ') (h_t - θ'))
//! M_T(θ')  = m K⁺_T(θ') + (1 - m) K⁻_T(θ')
//! ```
//!
//! and `θ'` stays in the confidence set while `M_T(θ') < 1/α`. The bet size
//! is one predictable `λ_t` shared by every candidate, shrunk per candidate
//! so that every factor stays strictly positive given `|h_t| ≤ k_t`.
//! Capital is held in log space.

use alloc::vec::Vec;

use crate::numeric::{log_add_exp, KahanSum};
use crate::types::Interval;

use super::{lambda_prpi, DEFAULT_LAMBDA_CAP};

pub const DEFAULT_GRID_POINTS: usize = 1000;
pub const DEFAULT_MIX: f64 = 0.5;
const PRIOR_MEAN: f64 = 0.5;
const PRIOR_VARIANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgedConfig {
    pub alpha: f64,
    pub grid_points: usize,
    /// Weight `m` of the upward bet.
    pub mix: f64,
    /// Cap `c` on the betting fraction.
    pub cap: f64,
    /// Relative distance kept from the positivity boundary of each bet.
    pub margin: f64,
    /// Probe the midpoint outside each boundary grid point.
    pub refine: bool,
}

impl HedgedConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            grid_points: DEFAULT_GRID_POINTS,
            mix: DEFAULT_MIX,
            cap: DEFAULT_LAMBDA_CAP,
            margin: 1e-6,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bet {
    h: f64,
    k: f64,
    lambda: f64,
}

#[derive(Debug, Clone)]
pub struct HedgedState {
    cfg: HedgedConfig,
    grid: Vec<f64>,
    log_up: Vec<f64>,
    log_down: Vec<f64>,
    // Capital at the midpoints between adjacent grid points, used to refine
    // the interval endpoints by half a cell.
    mids: Vec<f64>,
    log_up_mid: Vec<f64>,
    log_down_mid: Vec<f64>,
    log_mix_up: f64,
    log_mix_down: f64,
    log_threshold: f64,
    sum_h: KahanSum,
    sum_sq_dev: KahanSum,
    history: Vec<Bet>,
    gaps: usize,
}

impl HedgedState {
    /// # Panics
    /// If the grid has fewer than two points or the mix weight is outside
    /// `[0, 1]`.
    pub fn new(cfg: HedgedConfig) -> Self {
        assert!(cfg.grid_points >= 2, "hedged grid needs at least two points");
        assert!((0.0..=1.0).contains(&cfg.mix), "mix weight must lie in [0, 1]");
        let g = cfg.grid_points;
        let grid: Vec<f64> = (0..g).map(|i| -1.0 + 2.0 * i as f64 / (g - 1) as f64).collect();
        let mids: Vec<f64> =
            if cfg.refine { grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect() } else { Vec::new() };
        let m = mids.len();
        Self {
            cfg,
            grid,
            log_up: alloc::vec![0.0; g],
            log_down: alloc::vec![0.0; g],
            mids,
            log_up_mid: alloc::vec![0.0; m],
            log_down_mid: alloc::vec![0.0; m],
            log_mix_up: libm::log(cfg.mix),
            log_mix_down: libm::log(1.0 - cfg.mix),
            log_threshold: -libm::log(cfg.alpha),
            sum_h: KahanSum::new(),
            sum_sq_dev: KahanSum::new(),
            history: Vec::new(),
            gaps: 0,
        }
    }

    pub fn config(&self) -> &HedgedConfig {
        &self.cfg
    }

    pub fn count(&self) -> usize {
        self.history.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Number of updates whose confidence set was not contiguous on the grid.
    pub fn gap_events(&self) -> usize {
        self.gaps
    }

    /// Predictable mean estimate `(1/2 + Σ_{i<t} h_i) / t` for the next step.
    fn predicted_mean(&self) -> f64 {
        (PRIOR_MEAN + self.sum_h.value()) / (self.count() + 1) as f64
    }

    /// Predictable variance estimate `σ̂²_{t-1}` for the next step.
    fn predicted_variance(&self) -> f64 {
        let n = self.count();
        if n == 0 {
            PRIOR_VARIANCE
        } else {
            (PRIOR_VARIANCE + self.sum_sq_dev.value()) / n as f64
        }
    }

    /// Betting fraction the next update will use before per-candidate
    /// shrinkage.
    pub fn next_lambda(&self) -> f64 {
        lambda_prpi(self.count() + 1, self.predicted_variance(), self.cfg.alpha, self.cfg.cap)
    }

    /// Per-candidate bets `(λ⁺, λ⁻)` for base fraction `lambda` at level `k`.
    /// `λ⁺ < 1/(k + θ')` keeps `1 + λ⁺(h - θ')` positive and
    /// `λ⁻ < 1/(k - θ')` keeps `1 - λ⁻(h - θ')` positive.
    pub fn bets(&self, lambda: f64, k: f64, theta: f64) -> (f64, f64) {
        let keep = 1.0 - self.cfg.margin;
        (lambda.min(keep / (k + theta)), lambda.min(keep / (k - theta)))
    }

    /// Log of the mixed capital from the two log-capitals.
    pub fn log_mixture(&self, log_up: f64, log_down: f64) -> f64 {
        log_add_exp(self.log_mix_up + log_up, self.log_mix_down + log_down)
    }

    /// `(ln K⁺_T(θ'), ln K⁻_T(θ'))` for an arbitrary candidate, by replaying
    /// the bet history.
    pub fn log_capitals(&self, theta: f64) -> (f64, f64) {
        let mut up = 0.0;
        let mut down = 0.0;
        for b in &self.history {
            let (lu, ld) = self.bets(b.lambda, b.k, theta);
            up += libm::log1p(lu * (b.h - theta));
            down += libm::log1p(-ld * (b.h - theta));
        }
        (up, down)
    }

    /// `ln M_T(θ')` for an arbitrary candidate.
    pub fn log_capital(&self, theta: f64) -> f64 {
        let (up, down) = self.log_capitals(theta);
        self.log_mixture(up, down)
    }

    fn excluded(&self, log_m: f64) -> bool {
        !(log_m < self.log_threshold)
    }

    /// Folds in one score (`|h| ≤ k`) and returns the confidence set at the
    /// current time as an interval.
    pub fn update(&mut self, h: f64, k: f64) -> Interval {
        self.observe(h, k);
        self.interval()
    }

    /// Folds in one score without inverting the capital.
    pub fn observe(&mut self, h: f64, k: f64) {
        let lambda = self.next_lambda();
        let theta_hat = self.predicted_mean();
        let keep = 1.0 - self.cfg.margin;
        let step = |thetas: &[f64], up: &mut [f64], down: &mut [f64]| {
            for ((theta, u), d) in thetas.iter().zip(up.iter_mut()).zip(down.iter_mut()) {
                let lu = lambda.min(keep / (k + theta));
                let ld = lambda.min(keep / (k - theta));
                *u += libm::log1p(lu * (h - theta));
                *d += libm::log1p(-ld * (h - theta));
            }
        };
        step(&self.grid, &mut self.log_up, &mut self.log_down);
        step(&self.mids, &mut self.log_up_mid, &mut self.log_down_mid);
        self.sum_sq_dev.add((h - theta_hat) * (h - theta_hat));
        self.sum_h.add(h);
        self.history.push(Bet { h, k, lambda });
    }

    /// Confidence set at the current time.
    pub fn interval(&mut self) -> Interval {
        let mut first = None;
        let mut last = 0;
        let mut members = 0usize;
        for i in 0..self.grid.len() {
            if !self.excluded(self.log_mixture(self.log_up[i], self.log_down[i])) {
                first.get_or_insert(i);
                last = i;
                members += 1;
            }
        }
        let Some(first) = first else {
            return Interval::empty_at(1.0, -1.0);
        };
        if members != last - first + 1 {
            self.gaps += 1;
        }
        let mut lower = self.grid[first];
        let mut upper = self.grid[last];
        if self.cfg.refine {
            let mid_in = |j: usize| !self.excluded(self.log_mixture(self.log_up_mid[j], self.log_down_mid[j]));
            if first > 0 && mid_in(first - 1) {
                lower = self.mids[first - 1];
            }
            if last + 1 < self.grid.len() && mid_in(last) {
                upper = self.mids[last];
            }
        }
        Interval::new(lower, upper)
    }
}
