//! Gini classification trees and bagged forests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::util::derive_seed;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        prob: f64,
    },
}

/// A binary classification tree grown by Gini impurity.
///
/// Splits are searched feature-ascending, threshold-ascending, and a better
/// candidate must improve the Gini gain strictly, so equal-gain ties resolve
/// to the lowest feature index and then the lowest threshold. Nodes keep
/// splitting until purity, `max_depth`, or `min_leaf` stops them.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], max_depth: usize, min_leaf: usize) -> Self {
        let indices: Vec<usize> = (0..rows.len()).collect();
        Self::fit_on(rows, labels, &indices, max_depth, min_leaf, None)
    }

    /// Fit on a subset of row indices; when `feature_sampler` is set, each
    /// split considers only that many randomly drawn candidate features.
    pub(crate) fn fit_on(
        rows: &[Vec<f64>],
        labels: &[u8],
        indices: &[usize],
        max_depth: usize,
        min_leaf: usize,
        mut feature_sampler: Option<(usize, &mut ChaCha8Rng)>,
    ) -> Self {
        let mut nodes = Vec::new();
        build(
            rows,
            labels,
            indices,
            max_depth,
            min_leaf,
            0,
            &mut nodes,
            &mut feature_sampler,
        );
        DecisionTree { nodes }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { prob } => return *prob,
                Node::Split {
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

    pub(crate) fn scalar_digest_input(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len() * 4);
        for node in &self.nodes {
            match node {
                Node::Leaf { prob } => {
                    out.push(-1.0);
                    out.push(*prob);
                }
                Node::Split {
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
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn build(
    rows: &[Vec<f64>],
    labels: &[u8],
    indices: &[usize],
    max_depth: usize,
    min_leaf: usize,
    depth: usize,
    nodes: &mut Vec<Node>,
    feature_sampler: &mut Option<(usize, &mut ChaCha8Rng)>,
) -> usize {
    let n = indices.len();
    let positives = indices.iter().filter(|&&i| labels[i] == 1).count();
    let prob = positives as f64 / n as f64;

    let pure = positives == 0 || positives == n;
    if pure || depth >= max_depth || n < 2 * min_leaf {
        let idx = nodes.len();
        nodes.push(Node::Leaf { prob });
        return idx;
    }

    let width = rows[indices[0]].len();
    let candidates: Vec<usize> = match feature_sampler {
        Some((count, rng)) => {
            let mut sampled = super::sample_without_replacement(rng, width, *count);
            sampled.sort_unstable();
            sampled
        }
        None => (0..width).collect(),
    };

    let Some((feature, threshold)) = best_gini_split(rows, labels, indices, &candidates, min_leaf)
    else {
        let idx = nodes.len();
        nodes.push(Node::Leaf { prob });
        return idx;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| rows[i][feature] <= threshold);

    let node_idx = nodes.len();
    nodes.push(Node::Leaf { prob }); // placeholder
    let left = build(
        rows,
        labels,
        &left_idx,
        max_depth,
        min_leaf,
        depth + 1,
        nodes,
        feature_sampler,
    );
    let right = build(
        rows,
        labels,
        &right_idx,
        max_depth,
        min_leaf,
        depth + 1,
        nodes,
        feature_sampler,
    );
    nodes[node_idx] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_idx
}

/// Best (feature, threshold) by Gini gain. Candidates are scanned in
/// ascending feature order and ascending threshold order with strict
/// improvement, which makes tie-breaking deterministic.
fn best_gini_split(
    rows: &[Vec<f64>],
    labels: &[u8],
    indices: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = indices.len();
    let total_pos = indices.iter().filter(|&&i| labels[i] == 1).count();
    let parent = gini(total_pos, n);

    let mut best: Option<(usize, f64)> = None;
    let mut best_gain = f64::NEG_INFINITY;

    for &feature in candidates {
        let mut values: Vec<(f64, u8)> = indices
            .iter()
            .map(|&i| (rows[i][feature], labels[i]))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_pos = 0usize;
        for split_at in 1..n {
            left_pos += usize::from(values[split_at - 1].1 == 1);
            if values[split_at - 1].0 == values[split_at].0 {
                continue;
            }
            let left_n = split_at;
            let right_n = n - split_at;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let right_pos = total_pos - left_pos;
            let weighted = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / n as f64;
            let gain = parent - weighted;
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

fn gini(positives: usize, n: usize) -> f64 {
    let p = positives as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// A bag of Gini trees: bootstrap rows per tree, sqrt(m) candidate features
/// per split, mean of tree probabilities at prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[u8],
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
        seed: u64,
    ) -> Self {
        let n = rows.len();
        let width = rows[0].len();
        let per_split = (width as f64).sqrt().ceil() as usize;
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(seed, "forest_tree", &[t as u64]));
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                DecisionTree::fit_on(
                    rows,
                    labels,
                    &bootstrap,
                    max_depth,
                    min_leaf,
                    Some((per_split, &mut rng)),
                )
            })
            .collect();
        RandomForest { trees }
    }

    #[cfg(test)]
    pub(crate) fn from_trees(trees: Vec<DecisionTree>) -> Self {
        RandomForest { trees }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub(crate) fn scalar_digest_input(&self) -> Vec<f64> {
        self.trees
            .iter()
            .flat_map(|t| t.scalar_digest_input())
            .collect()
    }
}
