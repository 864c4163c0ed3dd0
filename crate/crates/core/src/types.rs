//! Domain values shared across the crate.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Treatment arm of a two-arm experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Control = 0,
    Treatment = 1,
}

impl Arm {
    pub fn from_index(a: u8) -> Option<Arm> {
        match a {
            0 => Some(Arm::Control),
            1 => Some(Arm::Treatment),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_treatment(self) -> bool {
        self == Arm::Treatment
    }
}

/// One subject: context, assigned arm and (rescaled) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: usize,
    pub x: Vec<f64>,
    pub arm: Arm,
    pub y: f64,
}

/// Declared bounds of the raw outcome. All confidence-sequence arithmetic
/// runs on outcomes mapped affinely to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRange {
    lo: f64,
    hi: f64,
}

impl OutcomeRange {
    pub const UNIT: OutcomeRange = OutcomeRange { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("outcome range requires finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Maps `y` into `[0, 1]`, rejecting values outside the declared range.
    pub fn rescale(&self, y: f64) -> Result<f64> {
        if !(y >= self.lo && y <= self.hi) {
            return Err(Error::DataValidation(format!(
                "outcome {y} outside declared range [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(((y - self.lo) / self.span()).clamp(0.0, 1.0))
    }

    pub fn unrescale(&self, u: f64) -> f64 {
        self.lo + u * self.span()
    }

    /// Maps a treatment effect (a difference of rescaled outcomes) back to
    /// raw units. The offset cancels, only the slope applies.
    pub fn effect_to_raw(&self, effect: f64) -> f64 {
        effect * self.span()
    }

    pub fn effect_to_unit(&self, effect: f64) -> f64 {
        effect / self.span()
    }

    pub fn interval_to_raw(&self, iv: Interval) -> Interval {
        Interval { lower: self.effect_to_raw(iv.lower), upper: self.effect_to_raw(iv.upper), empty: iv.empty }
    }
}

/// Closed interval on the extended reals. `empty` marks a running
/// intersection whose endpoints have crossed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
}

impl Interval {
    /// Range of the effect on the rescaled outcome scale.
    pub const PARAMETER_RANGE: Interval = Interval { lower: -1.0, upper: 1.0, empty: false };
    pub const UNBOUNDED: Interval = Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY, empty: false };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper, empty: lower > upper }
    }

    pub fn empty_at(lower: f64, upper: f64) -> Self {
        Self { lower, upper, empty: true }
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        !self.empty && self.lower <= value && value <= self.upper
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// `[max(lower), min(upper)]`; flagged empty when the endpoints cross.
    pub fn intersect(&self, other: &Interval) -> Interval {
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        Interval { lower, upper, empty: self.empty || other.empty || lower > upper }
    }
}

/// Per-step record of the score and the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub t: usize,
    pub h: f64,
    pub pi1: f64,
    pub k: f64,
    pub f1_hat: f64,
    pub f0_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    Geometric,
}

/// Sequence `k_t` bounding propensities to `[1/k_t, 1 - 1/k_t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSchedule {
    kind: ScheduleKind,
    k1: f64,
    decay: f64,
}

impl TruncationSchedule {
    pub fn constant(k: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant, k, 1.0)
    }

    /// `k_t = k_{t-1} / decay` starting from `k1`.
    pub fn geometric(k1: f64, decay: f64) -> Result<Self> {
        Self::new(ScheduleKind::Geometric, k1, decay)
    }

    /// Constant schedule with `k = 1 / pi_min`.
    pub fn from_min_propensity(pi_min: f64) -> Result<Self> {
        if !(pi_min > 0.0 && pi_min <= 0.5) {
            return Err(Error::Config(format!("pi_min must lie in (0, 0.5], got {pi_min}")));
        }
        Self::constant(1.0 / pi_min)
    }

    pub fn new(kind: ScheduleKind, k1: f64, decay: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 2.0) {
            return Err(Error::Config(format!("truncation k1 must be >= 2, got {k1}")));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::Config(format!("truncation decay must lie in (0, 1], got {decay}")));
        }
        Ok(Self { kind, k1, decay })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Advances the schedule one subject: `k1` at `t = 1`, otherwise
    /// `k_prev / decay` (geometric) or `k1` (constant).
    pub fn next_k(&self, k_prev: f64, t: usize) -> f64 {
        if t <= 1 {
            return self.k1;
        }
        match self.kind {
            ScheduleKind::Constant => self.k1,
            ScheduleKind::Geometric => k_prev / self.decay,
        }
    }

    /// Iterator over `k_1, k_2, ...`.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let mut k = 0.0;
        let mut t = 0usize;
        core::iter::from_fn(move || {
            t += 1;
            k = self.next_k(k, t);
            Some(k)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_examples() {
        assert_eq!(OutcomeRange::UNIT.rescale(0.5).unwrap(), 0.5);
        let r = OutcomeRange::new(1.0, 5.0).unwrap();
        assert_eq!(r.rescale(3.0).unwrap(), 0.5);
        assert_eq!(r.rescale(1.0).unwrap(), 0.0);
        assert_eq!(r.rescale(5.0).unwrap(), 1.0);
        assert!(matches!(r.rescale(5.5), Err(Error::DataValidation(_))));
        assert!(matches!(r.rescale(f64::NAN), Err(Error::DataValidation(_))));
    }

    #[test]
    fn effects_map_with_slope_only() {
        let r = OutcomeRange::new(0.2, 0.75).unwrap();
        let iv = r.interval_to_raw(Interval::new(-0.1, 0.3));
        assert!((iv.lower + 0.055).abs() < 1e-15);
        assert!((iv.width() - 0.4 * 0.55).abs() < 1e-15);
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(OutcomeRange::new(1.0, 1.0).is_err());
        assert!(OutcomeRange::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn geometric_schedule_matches_direct_exponentiation() {
        let s = TruncationSchedule::geometric(2.0, 0.999).unwrap();
        let ks: Vec<f64> = s.iter().take(5000).collect();
        for &t in &[1usize, 2, 10, 100, 1000, 5000] {
            let direct = 2.0 / libm::pow(0.999, (t - 1) as f64);
            assert!((ks[t - 1] - direct).abs() / direct < 1e-12, "t={t}");
        }
        assert!((ks[1] - 2.002_002_002_002_002).abs() < 1e-12);
        assert!(ks.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn constant_and_degenerate_schedules() {
        let c = TruncationSchedule::from_min_propensity(0.2).unwrap();
        assert!(c.iter().take(100).all(|k| (k - 5.0).abs() < 1e-15));
        let g = TruncationSchedule::geometric(3.0, 1.0).unwrap();
        assert!(g.iter().take(100).all(|k| k == 3.0));
        assert!(TruncationSchedule::constant(1.5).is_err());
        assert!(TruncationSchedule::geometric(2.0, 1.2).is_err());
    }

    #[test]
    fn interval_intersection() {
        let a = Interval::new(0.0, 1.0);
        assert_eq!(a.intersect(&Interval::UNBOUNDED), a);
        let b = a.intersect(&Interval::new(0.2, 1.5));
        assert_eq!((b.lower, b.upper, b.empty), (0.2, 1.0, false));
        let c = a.intersect(&Interval::new(1.5, 2.0));
        assert!(c.empty);
        assert_eq!(c.width(), 0.0);
        assert!(!c.contains(1.0));
    }
}
