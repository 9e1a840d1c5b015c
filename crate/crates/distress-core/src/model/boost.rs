//! Gradient boosted trees on the logistic loss.
//!
//! Each round fits a regression tree to the per-row gradient/hessian
//! statistics (g = p - y, h = p(1-p)); a leaf's weight is -G/(H + l2) and
//! the split gain is the standard second-order score
//! 0.5 [G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2)]. The two growth
//! strategies share everything but the order in which nodes are split:
//! level-wise expands the whole frontier to a depth cap, leaf-wise always
//! splits the leaf with the best gain until a leaf-count cap.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::tree::TreeNode;
use super::{log1p_exp, sigmoid, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthStrategy {
    LevelWise { max_depth: usize },
    LeafWise { max_leaves: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Log-odds of the training base rate.
    pub init_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode<f64>>,
    /// Training logistic loss after the init and after each round.
    pub train_loss: Vec<f64>,
}

impl BoostedModel {
    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let row = x.row(i);
                let margin: f64 = self.init_score
                    + self.learning_rate
                        * self.trees.iter().map(|t| t.evaluate(row)).sum::<f64>();
                sigmoid(margin)
            })
            .collect()
    }
}

/// Gain of putting (g, h) mass in one leaf.
fn leaf_score(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2).max(1e-12)
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Best split of `rows` by second-order gain; missing values stay left.
fn best_split(
    x: &Array2<f64>,
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    l2: f64,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let g_total: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h_total: f64 = rows.iter().map(|&r| hess[r]).sum();
    let parent = leaf_score(g_total, h_total, l2);

    let mut best: Option<SplitCandidate> = None;
    for feature in 0..x.ncols() {
        let mut present: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
        let mut g_nan = 0.0;
        let mut h_nan = 0.0;
        for &r in rows {
            let v = x[(r, feature)];
            if v.is_nan() {
                g_nan += grad[r];
                h_nan += hess[r];
            } else {
                present.push((v, grad[r], hess[r]));
            }
        }
        if present.len() < 2 {
            continue;
        }
        present.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut g_left = g_nan;
        let mut h_left = h_nan;
        for i in 0..present.len() - 1 {
            g_left += present[i].1;
            h_left += present[i].2;
            if present[i].0 == present[i + 1].0 {
                continue;
            }
            let g_right = g_total - g_left;
            let h_right = h_total - h_left;
            let gain =
                0.5 * (leaf_score(g_left, h_left, l2) + leaf_score(g_right, h_right, l2) - parent);
            let threshold = present[i].0;
            let better = match &best {
                None => gain > 1e-12,
                Some(b) => {
                    gain > b.gain
                        || (gain == b.gain && (feature, threshold) < (b.feature, b.threshold))
                }
            };
            if better && gain > 1e-12 {
                best = Some(SplitCandidate {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }
    best
}

fn partition(x: &Array2<f64>, rows: &[usize], feature: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&r| {
        let v = x[(r, feature)];
        v.is_nan() || v <= threshold
    })
}

fn leaf_weight(grad: &[f64], hess: &[f64], rows: &[usize], l2: f64) -> f64 {
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h: f64 = rows.iter().map(|&r| hess[r]).sum();
    -g / (h + l2).max(1e-12)
}

fn grow_level_wise(
    x: &Array2<f64>,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<usize>,
    depth: usize,
    max_depth: usize,
    l2: f64,
) -> TreeNode<f64> {
    if depth >= max_depth {
        return TreeNode::Leaf(leaf_weight(grad, hess, &rows, l2));
    }
    match best_split(x, grad, hess, &rows, l2) {
        Some(split) => {
            let (left_rows, right_rows) = partition(x, &rows, split.feature, split.threshold);
            TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow_level_wise(x, grad, hess, left_rows, depth + 1, max_depth, l2)),
                right: Box::new(grow_level_wise(
                    x, grad, hess, right_rows, depth + 1, max_depth, l2,
                )),
            }
        }
        None => TreeNode::Leaf(leaf_weight(grad, hess, &rows, l2)),
    }
}

/// Leaf-wise growth: a worklist of leaves ordered by gain; the best one is
/// split until the leaf budget runs out. Ties break to the earliest-created
/// leaf so the tree is fully pinned down.
fn grow_leaf_wise(
    x: &Array2<f64>,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<usize>,
    max_leaves: usize,
    l2: f64,
) -> TreeNode<f64> {
    // arena of nodes under construction
    enum Pending {
        Leaf(Vec<usize>),
        Split {
            feature: usize,
            threshold: f64,
            left: usize,
            right: usize,
        },
    }
    let mut arena: Vec<Pending> = vec![Pending::Leaf(rows)];
    // (gain, creation order, node id, candidate)
    let mut frontier: Vec<(usize, SplitCandidate)> = Vec::new();
    if let Pending::Leaf(rows0) = &arena[0] {
        if let Some(c) = best_split(x, grad, hess, rows0, l2) {
            frontier.push((0, c));
        }
    }
    let mut leaves = 1usize;
    while leaves < max_leaves && !frontier.is_empty() {
        // best gain; tie -> earliest node id
        let mut pick = 0;
        for i in 1..frontier.len() {
            let (id_i, c_i) = &frontier[i];
            let (id_b, c_b) = &frontier[pick];
            if c_i.gain > c_b.gain || (c_i.gain == c_b.gain && id_i < id_b) {
                pick = i;
            }
        }
        let (node_id, candidate) = frontier.swap_remove(pick);
        let node_rows = match &arena[node_id] {
            Pending::Leaf(r) => r.clone(),
            Pending::Split { .. } => unreachable!("frontier holds leaves only"),
        };
        let (left_rows, right_rows) =
            partition(x, &node_rows, candidate.feature, candidate.threshold);
        let left_id = arena.len();
        arena.push(Pending::Leaf(left_rows));
        let right_id = arena.len();
        arena.push(Pending::Leaf(right_rows));
        arena[node_id] = Pending::Split {
            feature: candidate.feature,
            threshold: candidate.threshold,
            left: left_id,
            right: right_id,
        };
        leaves += 1;
        for id in [left_id, right_id] {
            if let Pending::Leaf(r) = &arena[id] {
                if let Some(c) = best_split(x, grad, hess, r, l2) {
                    frontier.push((id, c));
                }
            }
        }
    }

    fn materialize(
        arena: &[Pending],
        id: usize,
        grad: &[f64],
        hess: &[f64],
        l2: f64,
    ) -> TreeNode<f64> {
        match &arena[id] {
            Pending::Leaf(rows) => TreeNode::Leaf(leaf_weight(grad, hess, rows, l2)),
            Pending::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(materialize(arena, *left, grad, hess, l2)),
                right: Box::new(materialize(arena, *right, grad, hess, l2)),
            },
        }
    }
    materialize(&arena, 0, grad, hess, l2)
}

pub fn train_gbt(
    data: &Dataset,
    strategy: GrowthStrategy,
    rounds: usize,
    learning_rate: f64,
    l2_reg: f64,
) -> Result<BoostedModel> {
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(Error::Manifest(format!(
            "learning_rate {learning_rate} outside (0, 1]"
        )));
    }
    let n = data.n_rows();
    let base = data.base_rate().clamp(1e-12, 1.0 - 1e-12);
    let init_score = (base / (1.0 - base)).ln();

    let mut margins = vec![init_score; n];
    let loss = |margins: &[f64]| -> f64 {
        margins
            .iter()
            .zip(&data.y)
            .map(|(&m, &y)| log1p_exp(m) - f64::from(y) * m)
            .sum()
    };

    let mut trees = Vec::with_capacity(rounds);
    let mut train_loss = vec![loss(&margins)];
    let rows: Vec<usize> = (0..n).collect();
    for _round in 0..rounds {
        let probs: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
        let grad: Vec<f64> = probs
            .iter()
            .zip(&data.y)
            .map(|(&p, &y)| p - f64::from(y))
            .collect();
        let hess: Vec<f64> = probs.iter().map(|&p| p * (1.0 - p)).collect();
        if hess.iter().sum::<f64>() < 1e-10 {
            log::warn!("degenerate hessians; stopping after {} rounds", trees.len());
            break;
        }
        let tree = match strategy {
            GrowthStrategy::LevelWise { max_depth } => {
                grow_level_wise(&data.x, &grad, &hess, rows.clone(), 0, max_depth, l2_reg)
            }
            GrowthStrategy::LeafWise { max_leaves } => {
                grow_leaf_wise(&data.x, &grad, &hess, rows.clone(), max_leaves, l2_reg)
            }
        };
        for (i, margin) in margins.iter_mut().enumerate() {
            *margin += learning_rate * tree.evaluate(data.x.row(i));
        }
        trees.push(tree);
        train_loss.push(loss(&margins));
    }
    Ok(BoostedModel {
        init_score,
        learning_rate,
        trees,
        train_loss,
    })
}
