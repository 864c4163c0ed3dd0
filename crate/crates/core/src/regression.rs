//! Sequentially sample-split plug-in estimates of `f(a, x) = E[Y | a, x]`
//! and `e(a, x) = E[Y² | a, x]`, and the conditional variance derived from
//! them.
//!
//! Every observation is permanently allocated to one of two folds when it
//! arrives. The prediction that enters an observation's score comes from
//! the models of the *opposite* fold; the prediction that drives the
//! assignment policy averages both folds, since it is needed before the
//! subject has a fold.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::Moments;
use crate::rng::RandomSource;
use crate::types::{Arm, Observation};

/// Default outcome-variance floor.
pub const DEFAULT_VFLOOR: f64 = 0.01;
pub const DEFAULT_WARMUP: usize = 100;
pub const DEFAULT_KNN_K: usize = 10;

/// Predicted first and second conditional moments of the outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub f_hat: f64,
    pub e_hat: f64,
}

impl Prediction {
    /// Clamps `f̂` into `[0, 1]` and `ê` into `[f̂², 1]`.
    pub fn clamped(self) -> Prediction {
        let f_hat = self.f_hat.clamp(0.0, 1.0);
        let e_hat = self.e_hat.clamp(f_hat * f_hat, 1.0);
        Prediction { f_hat, e_hat }
    }

    pub fn variance(&self, floor: f64) -> f64 {
        variance_estimate(self.f_hat, self.e_hat, floor)
    }
}

/// `max(ê - f̂², floor)`.
pub fn variance_estimate(f_hat: f64, e_hat: f64, floor: f64) -> f64 {
    let v = e_hat - f_hat * f_hat;
    if v > floor {
        v
    } else {
        floor
    }
}

/// A regressor that can be fed points one at a time and queried for the
/// conditional mean of `y` and of `y²`.
pub trait PlugInRegressor {
    fn insert(&mut self, x: &[f64], y: f64);
    /// `None` while the model has no training data.
    fn predict(&self, x: &[f64]) -> Option<Prediction>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Brute-force Euclidean k-nearest-neighbours regression. Training is lazy:
/// points are stored and searched at query time. With fewer than `k` points
/// every point is used. Ties in distance are broken by insertion order.
#[derive(Debug, Clone)]
pub struct KnnRegressor {
    k: usize,
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl KnnRegressor {
    pub fn new(k: usize, dim: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("model.k must be at least 1".into()));
        }
        Ok(Self { k, dim, xs: Vec::new(), ys: Vec::new() })
    }

    fn sq_dist(&self, i: usize, x: &[f64]) -> f64 {
        let row = &self.xs[i * self.dim..(i + 1) * self.dim];
        row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl PlugInRegressor for KnnRegressor {
    fn insert(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.xs.extend_from_slice(x);
        self.ys.push(y);
    }

    fn predict(&self, x: &[f64]) -> Option<Prediction> {
        let n = self.ys.len();
        if n == 0 {
            return None;
        }
        let (sum, sum_sq, used) = if n <= self.k {
            let s = self.ys.iter().sum::<f64>();
            let s2 = self.ys.iter().map(|y| y * y).sum::<f64>();
            (s, s2, n)
        } else {
            let mut d: Vec<(f64, usize)> = (0..n).map(|i| (self.sq_dist(i, x), i)).collect();
            d.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nearest: Vec<usize> = d[..self.k].iter().map(|p| p.1).collect();
            // Summation order fixed by index so results do not depend on the
            // selection algorithm's internal permutation.
            nearest.sort_unstable();
            let s = nearest.iter().map(|&i| self.ys[i]).sum::<f64>();
            let s2 = nearest.iter().map(|&i| self.ys[i] * self.ys[i]).sum::<f64>();
            (s, s2, self.k)
        };
        Some(Prediction { f_hat: sum / used as f64, e_hat: sum_sq / used as f64 })
    }

    fn len(&self) -> usize {
        self.ys.len()
    }
}

/// Source of outcome-moment predictions for scoring and for the policy.
pub trait OutcomeModel {
    /// Prediction used in the score of subject `t` (whose fold is known).
    fn predict_for_score(&self, x: &[f64], arm: Arm, t: usize) -> Prediction;
    /// Prediction used by the assignment policy before subject `t` is seen.
    fn predict_for_policy(&self, x: &[f64], arm: Arm, t: usize) -> Prediction;
}

/// Fallback used before an arm has any data: `f̂(1, ·) = 1`, `f̂(0, ·) = 0`.
fn prior_prediction(arm: Arm) -> Prediction {
    let f = if arm.is_treatment() { 1.0 } else { 0.0 };
    Prediction { f_hat: f, e_hat: f * f }
}

fn moments_prediction(m: &Moments) -> Option<Prediction> {
    if m.count() == 0 {
        None
    } else {
        Some(Prediction { f_hat: m.mean(), e_hat: m.mean_sq() })
    }
}

/// Two folds × two arms of plug-in regressors, with arm-conditional running
/// means as the warmup fallback.
#[derive(Debug, Clone)]
pub struct SplitRegressor<R> {
    models: [[R; 2]; 2],
    means: [[Moments; 2]; 2],
    folds: Vec<u8>,
    warmup: usize,
}

impl<R: PlugInRegressor + Clone> SplitRegressor<R> {
    pub fn new(template: R, warmup: usize) -> Self {
        let pair = [template.clone(), template.clone()];
        Self { models: [pair.clone(), pair], means: [[Moments::new(); 2]; 2], folds: Vec::new(), warmup }
    }
}

impl SplitRegressor<KnnRegressor> {
    pub fn knn(k: usize, dim: usize, warmup: usize) -> Result<Self> {
        Ok(Self::new(KnnRegressor::new(k, dim)?, warmup))
    }
}

impl<R: PlugInRegressor> SplitRegressor<R> {
    pub fn warmup(&self) -> usize {
        self.warmup
    }

    /// Permanently allocates subject `t` to a uniformly drawn fold. Subjects
    /// must be assigned in order `1, 2, 3, ...`.
    pub fn assign_fold(&mut self, t: usize, rng: &mut RandomSource) -> Result<u8> {
        let fold = u8::from(rng.random::<bool>());
        self.set_fold(t, fold)?;
        Ok(fold)
    }

    /// Records an externally chosen fold for subject `t`.
    pub fn set_fold(&mut self, t: usize, fold: u8) -> Result<()> {
        if fold > 1 {
            return Err(Error::Contract(format!("fold must be 0 or 1, got {fold}")));
        }
        let next = self.folds.len() + 1;
        if t < next {
            return Err(Error::Contract(format!("subject {t} already has a fold")));
        }
        if t > next {
            return Err(Error::Contract(format!("subject {t} assigned before subject {next}")));
        }
        self.folds.push(fold);
        Ok(())
    }

    pub fn fold_of(&self, t: usize) -> Option<u8> {
        t.checked_sub(1).and_then(|i| self.folds.get(i)).copied()
    }

    /// Number of training points per fold (summed over arms).
    pub fn fold_sizes(&self) -> [usize; 2] {
        [self.models[0][0].len() + self.models[0][1].len(), self.models[1][0].len() + self.models[1][1].len()]
    }

    /// Adds `obs` to the training data of its fold and arm.
    pub fn update(&mut self, obs: &Observation) -> Result<()> {
        let fold =
            self.fold_of(obs.t).ok_or_else(|| Error::Contract(format!("subject {} has no fold", obs.t)))? as usize;
        let arm = obs.arm.index();
        self.models[fold][arm].insert(&obs.x, obs.y);
        self.means[fold][arm].push(obs.y);
        Ok(())
    }

    /// Raw (unclamped) prediction from one fold's models.
    fn fold_prediction(&self, fold: usize, x: &[f64], arm: Arm, t: usize) -> Prediction {
        let a = arm.index();
        let learned =
            if t <= self.warmup { moments_prediction(&self.means[fold][a]) } else { self.models[fold][a].predict(x) };
        learned.unwrap_or_else(|| prior_prediction(arm))
    }
}

impl<R: PlugInRegressor> OutcomeModel for SplitRegressor<R> {
    /// # Panics
    /// If subject `t` has not been assigned a fold.
    fn predict_for_score(&self, x: &[f64], arm: Arm, t: usize) -> Prediction {
        let fold = self.fold_of(t).expect("fold must be assigned before scoring") as usize;
        self.fold_prediction(1 - fold, x, arm, t).clamped()
    }

    fn predict_for_policy(&self, x: &[f64], arm: Arm, t: usize) -> Prediction {
        let p0 = self.fold_prediction(0, x, arm, t);
        let p1 = self.fold_prediction(1, x, arm, t);
        Prediction { f_hat: 0.5 * (p0.f_hat + p1.f_hat), e_hat: 0.5 * (p0.e_hat + p1.e_hat) }.clamped()
    }
}
