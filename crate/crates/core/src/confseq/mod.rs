//! Anytime-valid confidence sequences for the treatment effect.
//!
//! All three constructions consume the score stream `h_t` together with the
//! truncation level `k_t` that bounds it (`|h_t| ≤ k_t`), and work on the
//! rescaled effect scale `θ ∈ [-1, 1]`. Each `update` returns the raw
//! confidence set at the current time; [`RunningIntersection`] turns those
//! into a monotone sequence.

use alloc::format;

use crate::error::{Error, Result};
use crate::types::Interval;

mod asymp;
mod hedged;
mod prpi;

pub use asymp::{asymp_interval, asymp_radius, rho_opt, rho_opt_for_variance, AsympState, DEFAULT_RHO};
pub use hedged::{HedgedConfig, HedgedState, DEFAULT_GRID_POINTS, DEFAULT_MIX};
pub use prpi::{PrpiSide, PrpiState, PRIOR_VARIANCE};

/// Cap on the betting fraction shared by the Hedged and PrPI strategies.
pub const DEFAULT_LAMBDA_CAP: f64 = 0.5;
/// First time at which intervals are reported.
pub const DEFAULT_T_MIN: usize = 50;

/// `ψ_E(λ) = -ln(1 - λ) - λ` for `λ ∈ [0, 1)`.
pub fn psi_e(lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("psi_E requires 0 <= lambda < 1, got {lambda}")));
    }
    Ok(psi_e_unchecked(lambda))
}

#[inline]
pub(crate) fn psi_e_unchecked(lambda: f64) -> f64 {
    -libm::log1p(-lambda) - lambda
}

/// Predictable betting fraction
/// `min( sqrt(2 ln(2/α) / (σ̂²_{t-1} t ln(1+t))), c )`.
pub fn lambda_prpi(t: usize, sigma2_prev: f64, alpha: f64, cap: f64) -> f64 {
    let t = t as f64;
    let raw = libm::sqrt(2.0 * libm::log(2.0 / alpha) / (sigma2_prev * t * libm::log1p(t)));
    if raw < cap {
        raw
    } else {
        cap
    }
}

/// Intersection of every reported interval since `start`. Before `start`
/// the full parameter range is reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningIntersection {
    start: usize,
    current: Interval,
    full: Interval,
}

impl RunningIntersection {
    pub fn new(start: usize) -> Self {
        Self::with_range(start, Interval::PARAMETER_RANGE)
    }

    pub fn with_range(start: usize, full: Interval) -> Self {
        Self { start, current: full, full }
    }

    pub fn current(&self) -> Interval {
        self.current
    }

    /// Intersects `raw` (the confidence set at time `t`) into the running
    /// interval and returns the reported interval.
    pub fn observe(&mut self, t: usize, raw: Interval) -> Interval {
        if t < self.start {
            return self.full;
        }
        self.current = running_intersect(&self.current, &raw);
        self.current
    }
}

/// `[max(L_prev, L_new), min(U_prev, U_new)]`, flagged empty once crossed.
pub fn running_intersect(prev: &Interval, new: &Interval) -> Interval {
    prev.intersect(new)
}

/// The interval constructions a run can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Clt,
    Hedged,
    Prpi,
    Asymp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Clt, Method::Hedged, Method::Prpi, Method::Asymp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Clt => "clt",
            Method::Hedged => "hedged",
            Method::Prpi => "prpi",
            Method::Asymp => "asymp",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Whether the method is a confidence sequence (running-intersected)
    /// rather than a fixed-time interval.
    pub fn is_sequential(self) -> bool {
        self != Method::Clt
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}
