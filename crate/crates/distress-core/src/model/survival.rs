//! Survival random forest for right-censored firm lifetimes.
//!
//! Trees split where the two-sample log-rank statistic between candidate
//! daughter nodes is largest, leaves hold the Nelson-Aalen cumulative hazard
//! estimator of their rows, and the ensemble score is the tree-averaged
//! cumulative hazard at the one-year horizon. The statistic and the
//! estimator depend only on the ordering of event times, so any strictly
//! monotone relabeling of durations leaves the tree structure unchanged.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::TreeNode;
use super::{mix_seed, Dataset, SurvivalPair};
use crate::error::{Error, Result};

/// Right-continuous step function, stored as (time, value) knots with value
/// constant from each knot to the next. Zero before the first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub steps: Vec<(f64, f64)>,
}

impl StepFunction {
    pub fn value_at(&self, t: f64) -> f64 {
        let mut value = 0.0;
        for &(time, v) in &self.steps {
            if time <= t {
                value = v;
            } else {
                break;
            }
        }
        value
    }
}

/// Nelson-Aalen cumulative hazard over the rows: at each distinct event time
/// add events / at-risk. All-censored rows give the zero function.
fn nelson_aalen(pairs: &[SurvivalPair]) -> StepFunction {
    let mut events: Vec<f64> = pairs
        .iter()
        .filter(|p| p.event)
        .map(|p| p.duration)
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();

    let mut steps = Vec::with_capacity(events.len());
    let mut hazard = 0.0;
    for &t in &events {
        let at_risk = pairs.iter().filter(|p| p.duration >= t).count() as f64;
        let d = pairs
            .iter()
            .filter(|p| p.event && p.duration == t)
            .count() as f64;
        hazard += d / at_risk;
        steps.push((t, hazard));
    }
    StepFunction { steps }
}

/// Standardized two-sample log-rank statistic |O - E| / sqrt(V) between the
/// `in_left` partition of `pairs`. Returns `None` when the variance is zero
/// (no informative event times).
pub fn log_rank_statistic(pairs: &[SurvivalPair], in_left: &[bool]) -> Option<f64> {
    let mut times: Vec<f64> = pairs
        .iter()
        .filter(|p| p.event)
        .map(|p| p.duration)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut observed_minus_expected = 0.0f64;
    let mut variance = 0.0f64;
    for &t in &times {
        let mut n = 0.0;
        let mut n_left = 0.0;
        let mut d = 0.0;
        let mut d_left = 0.0;
        for (pair, &left) in pairs.iter().zip(in_left) {
            if pair.duration >= t {
                n += 1.0;
                if left {
                    n_left += 1.0;
                }
                if pair.event && pair.duration == t {
                    d += 1.0;
                    if left {
                        d_left += 1.0;
                    }
                }
            }
        }
        if n <= 1.0 {
            continue;
        }
        let share = n_left / n;
        observed_minus_expected += d_left - d * share;
        variance += d * share * (1.0 - share) * (n - d) / (n - 1.0);
    }
    if variance <= 0.0 {
        return None;
    }
    Some(observed_minus_expected.abs() / variance.sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalForestModel {
    pub trees: Vec<TreeNode<StepFunction>>,
    /// Horizon at which the ensemble cumulative hazard becomes the score.
    pub horizon: f64,
}

impl SurvivalForestModel {
    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        self.predict_at(x, self.horizon)
    }

    /// Ensemble-averaged cumulative hazard at an arbitrary horizon.
    pub fn predict_at(&self, x: &Array2<f64>, horizon: f64) -> Vec<f64> {
        let b = self.trees.len() as f64;
        (0..x.nrows())
            .map(|i| {
                let row = x.row(i);
                self.trees
                    .iter()
                    .map(|t| t.leaf_for(row).value_at(horizon))
                    .sum::<f64>()
                    / b
            })
            .collect()
    }
}

struct SurvivalGrow<'a> {
    x: &'a Array2<f64>,
    pairs: &'a [SurvivalPair],
    mtry: usize,
    min_leaf: usize,
}

impl SurvivalGrow<'_> {
    /// Best (statistic, threshold) split of `rows` on `feature`; missing
    /// values stay in the left child.
    fn best_split_on_feature(&self, rows: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut values: Vec<f64> = rows
            .iter()
            .map(|&r| self.x[(r, feature)])
            .filter(|v| !v.is_nan())
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        if values.len() < 2 {
            return None;
        }

        let pairs: Vec<SurvivalPair> = rows.iter().map(|&r| self.pairs[r]).collect();
        let mut best: Option<(f64, f64)> = None;
        for &threshold in &values[..values.len() - 1] {
            let in_left: Vec<bool> = rows
                .iter()
                .map(|&r| {
                    let v = self.x[(r, feature)];
                    v.is_nan() || v <= threshold
                })
                .collect();
            let left_n = in_left.iter().filter(|&&l| l).count();
            if left_n < self.min_leaf || rows.len() - left_n < self.min_leaf {
                continue;
            }
            let Some(stat) = log_rank_statistic(&pairs, &in_left) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bs, bt)) => stat > bs || (stat == bs && threshold < bt),
            };
            if better {
                best = Some((stat, threshold));
            }
        }
        best
    }

    fn grow(&self, rows: &[usize], rng: &mut ChaCha8Rng) -> TreeNode<StepFunction> {
        let leaf = || {
            let pairs: Vec<SurvivalPair> = rows.iter().map(|&r| self.pairs[r]).collect();
            TreeNode::Leaf(nelson_aalen(&pairs))
        };
        if rows.len() < 2 * self.min_leaf {
            return leaf();
        }
        let p = self.x.ncols();
        let mut candidates: Vec<usize> = (0..p).collect();
        if self.mtry < p {
            candidates.shuffle(rng);
            candidates.truncate(self.mtry);
            candidates.sort_unstable();
        }

        let mut best: Option<(f64, usize, f64)> = None;
        for &feature in &candidates {
            if let Some((stat, threshold)) = self.best_split_on_feature(rows, feature) {
                let better = match best {
                    None => true,
                    Some((bs, bf, bt)) => {
                        stat > bs || (stat == bs && (feature, threshold) < (bf, bt))
                    }
                };
                if better {
                    best = Some((stat, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return leaf();
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
            let v = self.x[(r, feature)];
            v.is_nan() || v <= threshold
        });
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.grow(&left_rows, rng)),
            right: Box::new(self.grow(&right_rows, rng)),
        }
    }
}

pub fn train_survival_forest(
    data: &Dataset,
    trees: usize,
    mtry: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<SurvivalForestModel> {
    let pairs = data
        .survival
        .as_ref()
        .ok_or_else(|| Error::Data("survival pairs required".into()))?;
    let n = data.n_rows();
    let grower = SurvivalGrow {
        x: &data.x,
        pairs,
        mtry,
        min_leaf: min_leaf.max(1),
    };
    let fitted: Vec<TreeNode<StepFunction>> = (0..trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, b as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grower.grow(&rows, &mut rng)
        })
        .collect();
    Ok(SurvivalForestModel {
        trees: fitted,
        horizon: 1.0,
    })
}
