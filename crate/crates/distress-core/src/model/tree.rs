//! CART trees with Gini splitting.
//!
//! Splits send `x <= threshold` left, thresholds are always observed
//! training values, and missing values route left both when evaluating a
//! candidate split and at prediction time. Ties in impurity decrease break
//! to the lowest feature index, then the lowest threshold, which pins the
//! tree exactly for reproducibility.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Binary tree over feature splits. The leaf payload is the default
/// fraction for classification trees, a regression weight for boosted
/// trees, and a cumulative-hazard step function for survival trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode<L>>,
        right: Box<TreeNode<L>>,
    },
}

impl<L> TreeNode<L> {
    /// Routes a row to its leaf. Missing values go left.
    pub fn leaf_for(&self, row: ArrayView1<f64>) -> &L {
        match self {
            TreeNode::Leaf(value) => value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let v = row[*feature];
                if v.is_nan() || v <= *threshold {
                    left.leaf_for(row)
                } else {
                    right.leaf_for(row)
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

impl TreeNode<f64> {
    pub fn evaluate(&self, row: ArrayView1<f64>) -> f64 {
        *self.leaf_for(row)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CartParams {
    /// `None` grows until purity or the min_leaf guard stops it.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub mtry: usize,
}

/// Gini impurity 2p(1-p) from (rows, positives).
fn gini(n: f64, pos: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

/// Best split of `rows` on `feature`: returns (impurity decrease, threshold)
/// honoring the min_leaf guard. Rows with a missing feature value sit
/// permanently in the left child.
fn best_split_on_feature(
    x: &Array2<f64>,
    y: &[u8],
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let mut present: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
    let mut nan_count = 0usize;
    let mut nan_pos = 0usize;
    for &r in rows {
        let v = x[(r, feature)];
        if v.is_nan() {
            nan_count += 1;
            nan_pos += usize::from(y[r] == 1);
        } else {
            present.push((v, y[r]));
        }
    }
    if present.len() < 2 {
        return None;
    }
    present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let n = rows.len() as f64;
    let total_pos = present.iter().filter(|(_, l)| *l == 1).count() + nan_pos;
    let parent = gini(n, total_pos as f64);

    let mut best: Option<(f64, f64)> = None;
    let mut left_n = nan_count as f64;
    let mut left_pos = nan_pos as f64;
    for i in 0..present.len() - 1 {
        left_n += 1.0;
        left_pos += f64::from(present[i].1);
        if present[i].0 == present[i + 1].0 {
            continue;
        }
        let right_n = n - left_n;
        if (left_n as usize) < min_leaf || (right_n as usize) < min_leaf {
            continue;
        }
        let right_pos = total_pos as f64 - left_pos;
        let decrease =
            parent - (left_n / n) * gini(left_n, left_pos) - (right_n / n) * gini(right_n, right_pos);
        let threshold = present[i].0;
        let better = match best {
            None => true,
            Some((best_dec, best_thr)) => {
                decrease > best_dec || (decrease == best_dec && threshold < best_thr)
            }
        };
        if better {
            best = Some((decrease, threshold));
        }
    }
    best
}

fn node_value(y: &[u8], rows: &[usize]) -> f64 {
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    pos as f64 / rows.len() as f64
}

fn grow(
    x: &Array2<f64>,
    y: &[u8],
    rows: &[usize],
    params: &CartParams,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode<f64> {
    let value = node_value(y, rows);
    let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
    if depth_capped || value == 0.0 || value == 1.0 || rows.len() < 2 * params.min_leaf {
        return TreeNode::Leaf(value);
    }

    let p = x.ncols();
    let mut candidates: Vec<usize> = (0..p).collect();
    if params.mtry < p {
        candidates.shuffle(rng);
        candidates.truncate(params.mtry);
        candidates.sort_unstable();
    }

    let mut best: Option<(f64, usize, f64)> = None;
    for &feature in &candidates {
        if let Some((decrease, threshold)) = best_split_on_feature(x, y, rows, feature, params.min_leaf)
        {
            if decrease <= 1e-15 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bf, bt)) => {
                    decrease > bd
                        || (decrease == bd && (feature, threshold) < (bf, bt))
                }
            };
            if better {
                best = Some((decrease, feature, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return TreeNode::Leaf(value);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
        let v = x[(r, feature)];
        v.is_nan() || v <= threshold
    });
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, &left_rows, params, depth + 1, rng)),
        right: Box::new(grow(x, y, &right_rows, params, depth + 1, rng)),
    }
}

/// Trains a single CART tree on every row of the dataset.
pub fn train_cart(
    x: &Array2<f64>,
    y: &[u8],
    params: &CartParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode<f64> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    train_cart_on_rows(x, y, &rows, params, rng)
}

/// Trains on an explicit row multiset (bootstrap resamples repeat indices).
pub(crate) fn train_cart_on_rows(
    x: &Array2<f64>,
    y: &[u8],
    rows: &[usize],
    params: &CartParams,
    rng: &mut ChaCha8Rng,
) -> TreeNode<f64> {
    grow(x, y, rows, params, 0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn full_params(p: usize) -> CartParams {
        CartParams {
            max_depth: None,
            min_leaf: 1,
            mtry: p,
        }
    }

    #[test]
    fn pure_node_becomes_zero_leaf() {
        let x = array![[1.0], [2.0], [3.0]];
        let y = [0, 0, 0];
        let tree = train_cart(&x, &y, &full_params(1), &mut rng());
        assert_eq!(tree, TreeNode::Leaf(0.0));
    }

    #[test]
    fn balanced_labels_have_gini_half() {
        assert_eq!(gini(4.0, 2.0), 0.5);
        assert_eq!(gini(10.0, 5.0), 0.5);
        assert_eq!(gini(10.0, 0.0), 0.0);
    }

    #[test]
    fn stump_matches_exhaustive_search_oracle() {
        // 8 rows, 2 features; oracle enumerates every (feature, observed
        // threshold) pair and computes the impurity decrease directly
        let x = array![
            [0.1, 5.0],
            [0.4, 3.0],
            [0.9, 4.0],
            [1.3, 1.0],
            [2.0, 2.0],
            [2.5, 6.0],
            [3.1, 0.5],
            [3.8, 7.0]
        ];
        let y = [0, 0, 0, 1, 0, 1, 1, 1];

        let mut oracle_best: Option<(f64, usize, f64)> = None;
        for feature in 0..2 {
            let mut values: Vec<f64> = x.column(feature).to_vec();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for &threshold in &values[..values.len() - 1] {
                let (mut ln, mut lp, mut rn, mut rp) = (0.0, 0.0, 0.0, 0.0);
                for (i, &label) in y.iter().enumerate() {
                    if x[(i, feature)] <= threshold {
                        ln += 1.0;
                        lp += f64::from(label);
                    } else {
                        rn += 1.0;
                        rp += f64::from(label);
                    }
                }
                let n = ln + rn;
                let decrease =
                    gini(n, lp + rp) - (ln / n) * gini(ln, lp) - (rn / n) * gini(rn, rp);
                let better = match oracle_best {
                    None => true,
                    Some((bd, bf, bt)) => {
                        decrease > bd || (decrease == bd && (feature, threshold) < (bf, bt))
                    }
                };
                if better {
                    oracle_best = Some((decrease, feature, threshold));
                }
            }
        }
        let (_, oracle_feature, oracle_threshold) = oracle_best.unwrap();

        let stump = train_cart(
            &x,
            &y,
            &CartParams {
                max_depth: Some(1),
                min_leaf: 1,
                mtry: 2,
            },
            &mut rng(),
        );
        match stump {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(feature, oracle_feature);
                assert_eq!(threshold, oracle_threshold);
            }
            TreeNode::Leaf(_) => panic!("expected a split"),
        }
    }

    #[test]
    fn memorizes_training_data_at_full_depth() {
        let x = array![[0.1], [0.9], [1.7], [2.2], [3.0], [4.1]];
        let y = [0, 1, 0, 1, 1, 0];
        let tree = train_cart(&x, &y, &full_params(1), &mut rng());
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(tree.evaluate(x.row(i)), f64::from(label));
        }
    }

    #[test]
    fn min_leaf_guard_respected() {
        let x = array![[0.1], [0.9], [1.7], [2.2], [3.0], [4.1]];
        let y = [0, 1, 0, 1, 1, 0];
        let tree = train_cart(
            &x,
            &y,
            &CartParams {
                max_depth: None,
                min_leaf: 3,
                mtry: 1,
            },
            &mut rng(),
        );
        // with min_leaf 3 on 6 rows, at most one split is possible
        assert!(tree.leaf_count() <= 2);
    }

    #[test]
    fn missing_values_route_left() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 1, 1];
        let tree = train_cart(&x, &y, &full_params(1), &mut rng());
        let probe = array![[f64::NAN]];
        let left_value = tree.evaluate(array![0.0].view());
        assert_eq!(tree.evaluate(probe.row(0)), left_value);
    }
}
