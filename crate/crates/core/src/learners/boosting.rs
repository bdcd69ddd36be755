//! Gradient boosting over depth-limited regression trees, logistic loss.
//!
//! Two variants share the boosting loop and differ in how trees are grown and
//! valued. The first-order variant fits each tree to the negative gradient
//! (label minus probability) with squared-error splits and mean-residual
//! leaves. The second-order variant grows trees on the gain statistic
//! `G^2 / (H + l2)` and assigns Newton leaf weights `-G / (H + l2)`, with the
//! L2 penalty shrinking leaves that see little Hessian mass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_without_replacement, sigmoid};
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoostingVariant {
    FirstOrder,
    SecondOrderL2(f64),
}

#[derive(Debug, Clone, PartialEq)]
enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct RegTree {
    nodes: Vec<RegNode>,
}

impl RegTree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Per-sample statistics a boosting tree is grown on: the residual `y - p`
/// and the Hessian `p (1 - p)`.
#[derive(Debug, Clone, Copy)]
struct GradPair {
    residual: f64,
    hessian: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedTrees {
    variant: BoostingVariant,
    init_score: f64,
    shrinkage: f64,
    trees: Vec<RegTree>,
}

impl BoostedTrees {
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[u8],
        variant: BoostingVariant,
        n_trees: usize,
        max_depth: usize,
        shrinkage: f64,
        subsample: f64,
        min_leaf: usize,
        seed: u64,
    ) -> Self {
        let n = rows.len();
        let base_rate = labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
        let p0 = base_rate.clamp(1e-8, 1.0 - 1e-8);
        let init_score = (p0 / (1.0 - p0)).ln();

        let mut scores = vec![init_score; n];
        let mut trees = Vec::with_capacity(n_trees);
        for round in 0..n_trees {
            let pairs: Vec<GradPair> = scores
                .iter()
                .zip(labels)
                .map(|(&f, &y)| {
                    let p = sigmoid(f);
                    GradPair {
                        residual: f64::from(y) - p,
                        hessian: (p * (1.0 - p)).max(1e-12),
                    }
                })
                .collect();

            let indices: Vec<usize> = if subsample < 1.0 {
                let count = ((n as f64 * subsample).round() as usize).clamp(1, n);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    "boost_subsample",
                    &[round as u64],
                ));
                let mut ids = sample_without_replacement(&mut rng, n, count);
                ids.sort_unstable();
                ids
            } else {
                (0..n).collect()
            };

            let mut nodes = Vec::new();
            grow(
                rows, &pairs, &indices, variant, max_depth, min_leaf, 0, &mut nodes,
            );
            let tree = RegTree { nodes };
            for (score, row) in scores.iter_mut().zip(rows) {
                *score += shrinkage * tree.predict_row(row);
            }
            trees.push(tree);
        }

        BoostedTrees {
            variant,
            init_score,
            shrinkage,
            trees,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut score = self.init_score;
        for tree in &self.trees {
            score += self.shrinkage * tree.predict_row(row);
        }
        sigmoid(score)
    }

    pub(crate) fn scalar_digest_input(&self) -> Vec<f64> {
        let mut out = vec![self.init_score, self.shrinkage];
        for tree in &self.trees {
            for node in &tree.nodes {
                match node {
                    RegNode::Leaf { value } => {
                        out.push(-1.0);
                        out.push(*value);
                    }
                    RegNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(*feature as f64);
                        out.push(*threshold);
                        out.push(*left as f64);
                        out.push(*right as f64);
                    }
                }
            }
        }
        out
    }
}

fn leaf_value(pairs: &[GradPair], indices: &[usize], variant: BoostingVariant) -> f64 {
    match variant {
        BoostingVariant::FirstOrder => {
            let sum: f64 = indices.iter().map(|&i| pairs[i].residual).sum();
            sum / indices.len() as f64
        }
        BoostingVariant::SecondOrderL2(l2) => {
            let g: f64 = indices.iter().map(|&i| pairs[i].residual).sum();
            let h: f64 = indices.iter().map(|&i| pairs[i].hessian).sum();
            g / (h + l2)
        }
    }
}

/// Split score to maximize: negative SSE for the first-order variant,
/// `G^2 / (H + l2)` for the second-order one.
fn node_score(pairs: &[GradPair], indices: &[usize], variant: BoostingVariant) -> f64 {
    match variant {
        BoostingVariant::FirstOrder => {
            let n = indices.len() as f64;
            let sum: f64 = indices.iter().map(|&i| pairs[i].residual).sum();
            // -SSE around the mean, dropping the constant sum of squares:
            // maximizing sum^2 / n over both children is equivalent.
            sum * sum / n
        }
        BoostingVariant::SecondOrderL2(l2) => {
            let g: f64 = indices.iter().map(|&i| pairs[i].residual).sum();
            let h: f64 = indices.iter().map(|&i| pairs[i].hessian).sum();
            g * g / (h + l2)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn grow(
    rows: &[Vec<f64>],
    pairs: &[GradPair],
    indices: &[usize],
    variant: BoostingVariant,
    max_depth: usize,
    min_leaf: usize,
    depth: usize,
    nodes: &mut Vec<RegNode>,
) -> usize {
    let n = indices.len();
    if depth >= max_depth || n < 2 * min_leaf {
        let idx = nodes.len();
        nodes.push(RegNode::Leaf {
            value: leaf_value(pairs, indices, variant),
        });
        return idx;
    }

    let Some((feature, threshold)) = best_split(rows, pairs, indices, variant, min_leaf) else {
        let idx = nodes.len();
        nodes.push(RegNode::Leaf {
            value: leaf_value(pairs, indices, variant),
        });
        return idx;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| rows[i][feature] <= threshold);

    let node_idx = nodes.len();
    nodes.push(RegNode::Leaf { value: 0.0 }); // placeholder
    let left = grow(
        rows, pairs, &left_idx, variant, max_depth, min_leaf, depth + 1, nodes,
    );
    let right = grow(
        rows, pairs, &right_idx, variant, max_depth, min_leaf, depth + 1, nodes,
    );
    nodes[node_idx] = RegNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_idx
}

fn best_split(
    rows: &[Vec<f64>],
    pairs: &[GradPair],
    indices: &[usize],
    variant: BoostingVariant,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = indices.len();
    let width = rows[indices[0]].len();
    let parent = node_score(pairs, indices, variant);

    let mut best: Option<(usize, f64)> = None;
    let mut best_gain = 1e-12; // require a strictly positive improvement

    for feature in 0..width {
        let mut values: Vec<(f64, f64, f64)> = indices
            .iter()
            .map(|&i| (rows[i][feature], pairs[i].residual, pairs[i].hessian))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total_g: f64 = values.iter().map(|v| v.1).sum();
        let total_h: f64 = values.iter().map(|v| v.2).sum();
        let mut left_g = 0.0;
        let mut left_h = 0.0;

        for split_at in 1..n {
            left_g += values[split_at - 1].1;
            left_h += values[split_at - 1].2;
            if values[split_at - 1].0 == values[split_at].0 {
                continue;
            }
            let left_n = split_at;
            let right_n = n - split_at;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let right_g = total_g - left_g;
            let right_h = total_h - left_h;
            let children = match variant {
                BoostingVariant::FirstOrder => {
                    left_g * left_g / left_n as f64 + right_g * right_g / right_n as f64
                }
                BoostingVariant::SecondOrderL2(l2) => {
                    left_g * left_g / (left_h + l2) + right_g * right_g / (right_h + l2)
                }
            };
            let gain = children - parent;
            if gain > best_gain {
                best_gain = gain;
                best = Some((
                    feature,
                    (values[split_at - 1].0 + values[split_at].0) / 2.0,
                ));
            }
        }
    }
    best
}
