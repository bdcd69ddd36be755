//! Self-contained probabilistic binary classifiers.
//!
//! Five learner kinds: full-batch logistic regression, a Gini CART tree, a
//! bagged random forest, and two gradient-boosting variants (first-order
//! leaves, and second-order leaves with an L2 penalty). All of them train
//! deterministically from `(kind, data, seed)` and emit probabilities in
//! `[0, 1]`, never NaN. Nothing here depends on the protocol: models are
//! plain values that the protocol layer owns and shares.

mod boosting;
mod logistic;
mod tree;

pub use boosting::{BoostedTrees, BoostingVariant};
pub use logistic::{
    fit_logistic, logistic_loss_gradient, LogisticFit, LogisticModel,
};
pub use tree::{DecisionTree, RandomForest};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::util::derive_seed;
use crate::{Error, Result};

/// Probabilities are clamped to this range before log-loss.
pub const PROB_CLAMP: f64 = 1e-6;

/// A learner family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerKind {
    LinearLogistic {
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
    },
    Cart {
        #[serde(default = "default_cart_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    RandomForest {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default = "default_forest_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    Gbm {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default = "default_boost_depth")]
        max_depth: usize,
        #[serde(default = "default_shrinkage")]
        shrinkage: f64,
        #[serde(default = "default_subsample")]
        subsample: f64,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    GbmL2 {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default = "default_boost_depth")]
        max_depth: usize,
        #[serde(default = "default_shrinkage")]
        shrinkage: f64,
        #[serde(default = "default_subsample")]
        subsample: f64,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
        #[serde(default = "default_l2")]
        l2: f64,
    },
}

fn default_learning_rate() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    500
}
fn default_cart_depth() -> usize {
    5
}
fn default_forest_depth() -> usize {
    8
}
fn default_boost_depth() -> usize {
    3
}
fn default_min_leaf() -> usize {
    2
}
fn default_n_trees() -> usize {
    100
}
fn default_shrinkage() -> f64 {
    0.1
}
fn default_subsample() -> f64 {
    1.0
}
fn default_l2() -> f64 {
    1.0
}

impl LearnerKind {
    pub fn linear_logistic() -> Self {
        LearnerKind::LinearLogistic {
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
        }
    }

    pub fn cart() -> Self {
        LearnerKind::Cart {
            max_depth: default_cart_depth(),
            min_leaf: default_min_leaf(),
        }
    }

    pub fn random_forest() -> Self {
        LearnerKind::RandomForest {
            n_trees: default_n_trees(),
            max_depth: default_forest_depth(),
            min_leaf: default_min_leaf(),
        }
    }

    pub fn gbm() -> Self {
        LearnerKind::Gbm {
            n_trees: default_n_trees(),
            max_depth: default_boost_depth(),
            shrinkage: default_shrinkage(),
            subsample: default_subsample(),
            min_leaf: default_min_leaf(),
        }
    }

    pub fn gbm_l2() -> Self {
        LearnerKind::GbmL2 {
            n_trees: default_n_trees(),
            max_depth: default_boost_depth(),
            shrinkage: default_shrinkage(),
            subsample: default_subsample(),
            min_leaf: default_min_leaf(),
            l2: default_l2(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::LinearLogistic { .. } => "linear_logistic",
            LearnerKind::Cart { .. } => "cart",
            LearnerKind::RandomForest { .. } => "random_forest",
            LearnerKind::Gbm { .. } => "gbm",
            LearnerKind::GbmL2 { .. } => "gbm_l2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            LearnerKind::LinearLogistic {
                learning_rate,
                epochs,
            } => {
                if learning_rate <= 0.0 || !learning_rate.is_finite() {
                    return bad(format!("learning_rate must be positive, got {learning_rate}"));
                }
                if epochs == 0 {
                    return bad("epochs must be positive".into());
                }
            }
            LearnerKind::Cart {
                max_depth,
                min_leaf,
            } => {
                if max_depth == 0 || min_leaf == 0 {
                    return bad("max_depth and min_leaf must be positive".into());
                }
            }
            LearnerKind::RandomForest {
                n_trees,
                max_depth,
                min_leaf,
            } => {
                if n_trees == 0 || max_depth == 0 || min_leaf == 0 {
                    return bad("n_trees, max_depth and min_leaf must be positive".into());
                }
            }
            LearnerKind::Gbm {
                n_trees,
                max_depth,
                shrinkage,
                subsample,
                min_leaf,
            }
            | LearnerKind::GbmL2 {
                n_trees,
                max_depth,
                shrinkage,
                subsample,
                min_leaf,
                ..
            } => {
                if n_trees == 0 || max_depth == 0 || min_leaf == 0 {
                    return bad("n_trees, max_depth and min_leaf must be positive".into());
                }
                if !(shrinkage > 0.0 && shrinkage <= 1.0) {
                    return bad(format!("shrinkage must lie in (0, 1], got {shrinkage}"));
                }
                if !(subsample > 0.0 && subsample <= 1.0) {
                    return bad(format!("subsample must lie in (0, 1], got {subsample}"));
                }
                if let LearnerKind::GbmL2 { l2, .. } = *self {
                    if l2 < 0.0 || !l2.is_finite() {
                        return bad(format!("l2 must be non-negative, got {l2}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Target AUC interval for base-model bootstrapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucBand {
    pub low: f64,
    pub high: f64,
}

impl AucBand {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let band = AucBand { low, high };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.low)
            || !(0.0..=1.0).contains(&self.high)
            || self.low >= self.high
        {
            return Err(Error::InvalidConfig(format!(
                "auc band must satisfy 0 <= low < high <= 1, got [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    pub fn contains(&self, auc: f64) -> bool {
        (self.low..=self.high).contains(&auc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ModelParams {
    Logistic(LogisticModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Boosted(BoostedTrees),
}

/// A fitted model plus the metadata the protocol needs: which columns of the
/// owner's view it consumes, and whose it is.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    /// Input columns, as indices into the owner's view matrix, ascending.
    pub feature_indices: Vec<usize>,
    pub owner: usize,
    params: ModelParams,
}

impl TrainedModel {
    pub fn n_inputs(&self) -> usize {
        self.feature_indices.len()
    }

    /// Probability of class 1 per row. `rows` must have exactly
    /// `feature_indices.len()` columns, in the same order.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let expected = self.feature_indices.len();
        for row in rows {
            if row.len() != expected {
                return Err(Error::ShapeMismatch {
                    expected,
                    got: row.len(),
                });
            }
        }
        let probs: Vec<f64> = match &self.params {
            ModelParams::Logistic(m) => rows.iter().map(|r| m.predict_row(r)).collect(),
            ModelParams::Tree(m) => rows.iter().map(|r| m.predict_row(r)).collect(),
            ModelParams::Forest(m) => rows.iter().map(|r| m.predict_row(r)).collect(),
            ModelParams::Boosted(m) => rows.iter().map(|r| m.predict_row(r)).collect(),
        };
        debug_assert!(probs.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p)));
        Ok(probs)
    }

    /// Summary for logs: kind, hyperparameters, input columns and a digest of
    /// the fitted parameters. The parameters themselves never leave the model.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "feature_indices": self.feature_indices,
            "owner": self.owner,
            "params_digest": self.params_digest(),
        })
    }

    fn params_digest(&self) -> String {
        let scalars = match &self.params {
            ModelParams::Logistic(m) => m.scalar_digest_input(),
            ModelParams::Tree(m) => m.scalar_digest_input(),
            ModelParams::Forest(m) => m.scalar_digest_input(),
            ModelParams::Boosted(m) => m.scalar_digest_input(),
        };
        let mut bytes = Vec::with_capacity(scalars.len() * 8);
        for v in scalars {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        crate::util::sha256_hex(&bytes)
    }

    #[cfg(test)]
    pub(crate) fn from_params(kind: LearnerKind, n_inputs: usize, params: ModelParams) -> Self {
        TrainedModel {
            kind,
            feature_indices: (0..n_inputs).collect(),
            owner: 0,
            params,
        }
    }
}

fn validate_training_input(rows: &[Vec<f64>], labels: &[u8]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidTrainingData("empty training set".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::InvalidTrainingData(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let width = rows[0].len();
    if width == 0 {
        return Err(Error::InvalidTrainingData("rows have no columns".into()));
    }
    for row in rows {
        if row.len() != width {
            return Err(Error::InvalidTrainingData("ragged rows".into()));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrainingData(
                "non-finite feature value".into(),
            ));
        }
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidTrainingData(
            "labels must be 0 or 1".into(),
        ));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Fit a model of the given kind. Deterministic in `(kind, rows, labels, seed)`.
pub fn train(
    kind: &LearnerKind,
    rows: &[Vec<f64>],
    labels: &[u8],
    seed: u64,
) -> Result<TrainedModel> {
    kind.validate()?;
    validate_training_input(rows, labels)?;
    let n_inputs = rows[0].len();
    let params = match *kind {
        LearnerKind::LinearLogistic {
            learning_rate,
            epochs,
        } => {
            let fit = fit_logistic(rows, labels, learning_rate, epochs);
            ModelParams::Logistic(fit.model)
        }
        LearnerKind::Cart {
            max_depth,
            min_leaf,
        } => ModelParams::Tree(DecisionTree::fit(rows, labels, max_depth, min_leaf)),
        LearnerKind::RandomForest {
            n_trees,
            max_depth,
            min_leaf,
        } => ModelParams::Forest(RandomForest::fit(
            rows, labels, n_trees, max_depth, min_leaf, seed,
        )),
        LearnerKind::Gbm {
            n_trees,
            max_depth,
            shrinkage,
            subsample,
            min_leaf,
        } => ModelParams::Boosted(BoostedTrees::fit(
            rows,
            labels,
            BoostingVariant::FirstOrder,
            n_trees,
            max_depth,
            shrinkage,
            subsample,
            min_leaf,
            seed,
        )),
        LearnerKind::GbmL2 {
            n_trees,
            max_depth,
            shrinkage,
            subsample,
            min_leaf,
            l2,
        } => ModelParams::Boosted(BoostedTrees::fit(
            rows,
            labels,
            BoostingVariant::SecondOrderL2(l2),
            n_trees,
            max_depth,
            shrinkage,
            subsample,
            min_leaf,
            seed,
        )),
    };
    Ok(TrainedModel {
        kind: kind.clone(),
        feature_indices: (0..n_inputs).collect(),
        owner: 0,
        params,
    })
}

/// Mean binary log-loss with probabilities clamped away from 0 and 1.
pub fn log_loss(probs: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(probs.len(), labels.len());
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Outcome of [`train_to_band`].
#[derive(Debug, Clone)]
pub struct BandedModel {
    pub model: TrainedModel,
    pub attempts_used: usize,
    pub eval_auc: f64,
}

/// Bootstrap a base model into a target AUC band.
///
/// Each attempt redraws `n_feat` distinct columns and `n_inst` rows (with
/// replacement, so attempts differ even when the warm-start set is no larger
/// than `n_inst`) using a derived seed, trains, and scores on the evaluation
/// set (the observer's test split). Returns the first attempt whose
/// evaluation AUC falls inside the band, or an error carrying the best AUC
/// seen.
#[allow(clippy::too_many_arguments)]
pub fn train_to_band(
    kind: &LearnerKind,
    band: AucBand,
    warm_rows: &[Vec<f64>],
    warm_labels: &[u8],
    eval_rows: &[Vec<f64>],
    eval_labels: &[u8],
    n_feat: usize,
    n_inst: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<BandedModel> {
    band.validate()?;
    if warm_rows.len() < n_inst {
        return Err(Error::InvalidTrainingData(format!(
            "warm-start set has {} rows, need {n_inst}",
            warm_rows.len()
        )));
    }
    let width = warm_rows.first().map_or(0, Vec::len);
    if width < n_feat {
        return Err(Error::InvalidTrainingData(format!(
            "warm-start set has {width} columns, need {n_feat}"
        )));
    }
    if max_attempts == 0 {
        return Err(Error::InvalidConfig("max_attempts must be positive".into()));
    }

    let mut best = f64::NAN;
    for attempt in 0..max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "band_attempt", &[attempt as u64]));
        let mut columns = sample_without_replacement(&mut rng, width, n_feat);
        columns.sort_unstable();
        let row_ids: Vec<usize> = (0..n_inst)
            .map(|_| rand::Rng::gen_range(&mut rng, 0..warm_rows.len()))
            .collect();

        let sub_rows: Vec<Vec<f64>> = row_ids
            .iter()
            .map(|&r| columns.iter().map(|&c| warm_rows[r][c]).collect())
            .collect();
        let sub_labels: Vec<u8> = row_ids.iter().map(|&r| warm_labels[r]).collect();
        let positives = sub_labels.iter().filter(|&&y| y == 1).count();
        if positives == 0 || positives == sub_labels.len() {
            // Degenerate draw; spend the attempt and move on.
            continue;
        }

        let mut model = train(
            kind,
            &sub_rows,
            &sub_labels,
            derive_seed(seed, "band_train", &[attempt as u64]),
        )?;
        model.feature_indices = columns.clone();

        let eval_sub = crate::util::select_columns(eval_rows, &columns);
        let probs = model.predict_proba(&eval_sub)?;
        let auc = crate::metrics::auc(&probs, eval_labels)?.value;
        if band.contains(auc) {
            return Ok(BandedModel {
                model,
                attempts_used: attempt + 1,
                eval_auc: auc,
            });
        }
        if best.is_nan() || (auc - band.low).abs() < (best - band.low).abs() {
            best = auc;
        }
    }
    Err(Error::BandUnreachable {
        collaborator: 0,
        low: band.low,
        high: band.high,
        attempts: max_attempts,
        best,
    })
}

pub(crate) fn sample_without_replacement(
    rng: &mut ChaCha8Rng,
    n: usize,
    count: usize,
) -> Vec<usize> {
    let count = count.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rand::Rng::gen_range(rng, 0..n - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn separable_set(n: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        // One informative axis, one constant distractor.
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = u8::from(i % 2 == 1);
            let x = if y == 1 {
                2.0 + (i as f64 % 7.0) * 0.1
            } else {
                -2.0 - (i as f64 % 5.0) * 0.1
            };
            rows.push(vec![x, 1.0]);
            labels.push(y);
        }
        (rows, labels)
    }

    #[test]
    fn logistic_learns_separable_direction() {
        let kind = LearnerKind::linear_logistic();
        let rows = vec![vec![0.0], vec![1.0], vec![0.1], vec![0.9]];
        let labels = vec![0, 1, 0, 1];
        let model = train(&kind, &rows, &labels, 0).unwrap();
        let probs = model.predict_proba(&[vec![1.0], vec![0.0]]).unwrap();
        assert!(probs[0] > 0.5, "p(1) = {}", probs[0]);
        assert!(probs[1] < 0.5, "p(0) = {}", probs[1]);
    }

    #[test]
    fn zero_epoch_logistic_outputs_half() {
        // With no updates the weights stay at zero and sigmoid(0) = 0.5.
        let fit = fit_logistic(&[vec![3.0], vec![-1.0]], &[1, 0], 0.1, 0);
        assert_eq!(fit.model.predict_row(&[123.0]), 0.5);
    }

    #[test]
    fn cart_shatters_xor_at_depth_two() {
        // All 8 depth-2 label assignments of the XOR square are enumerable;
        // the tree must reproduce the XOR one exactly.
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let labels = vec![0, 1, 1, 0];
        let kind = LearnerKind::Cart {
            max_depth: 2,
            min_leaf: 1,
        };
        let model = train(&kind, &rows, &labels, 0).unwrap();
        let probs = model.predict_proba(&rows).unwrap();
        for (p, &y) in probs.iter().zip(&labels) {
            let predicted = u8::from(*p >= 0.5);
            assert_eq!(predicted, y, "probs {probs:?}");
        }
    }

    #[test]
    fn gbm_multi_round_beats_single_round() {
        let (rows, labels) = separable_set(100);
        let one = train(
            &LearnerKind::Gbm {
                n_trees: 1,
                max_depth: 3,
                shrinkage: 0.1,
                subsample: 1.0,
                min_leaf: 2,
            },
            &rows,
            &labels,
            7,
        )
        .unwrap();
        let fifty = train(
            &LearnerKind::Gbm {
                n_trees: 50,
                max_depth: 3,
                shrinkage: 0.1,
                subsample: 1.0,
                min_leaf: 2,
            },
            &rows,
            &labels,
            7,
        )
        .unwrap();
        let loss_one = log_loss(&one.predict_proba(&rows).unwrap(), &labels);
        let loss_fifty = log_loss(&fifty.predict_proba(&rows).unwrap(), &labels);
        assert!(
            loss_fifty < loss_one,
            "50 rounds {loss_fifty} vs 1 round {loss_one}"
        );
    }

    #[test]
    fn training_input_errors() {
        let kind = LearnerKind::linear_logistic();
        assert!(matches!(
            train(&kind, &[], &[], 0),
            Err(Error::InvalidTrainingData(_))
        ));
        assert!(matches!(
            train(&kind, &[vec![1.0], vec![2.0]], &[1, 1], 0),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            train(&kind, &[vec![f64::NAN], vec![2.0]], &[1, 0], 0),
            Err(Error::InvalidTrainingData(_))
        ));
    }

    #[test]
    fn predict_shape_mismatch_errors() {
        let (rows, labels) = separable_set(20);
        let model = train(&LearnerKind::cart(), &rows, &labels, 0).unwrap();
        assert!(matches!(
            model.predict_proba(&[vec![1.0]]),
            Err(Error::ShapeMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn forest_of_identical_trees_equals_single_tree() {
        let (rows, labels) = separable_set(30);
        let tree = DecisionTree::fit(&rows, &labels, 3, 1);
        let forest = RandomForest::from_trees(vec![tree.clone(), tree.clone(), tree.clone()]);
        for row in &rows {
            assert_eq!(forest.predict_row(row), tree.predict_row(row));
        }
    }

    #[test]
    fn determinism_across_kinds() {
        let (rows, labels) = separable_set(60);
        for kind in [
            LearnerKind::linear_logistic(),
            LearnerKind::cart(),
            LearnerKind::RandomForest {
                n_trees: 10,
                max_depth: 4,
                min_leaf: 2,
            },
            LearnerKind::Gbm {
                n_trees: 10,
                max_depth: 3,
                shrinkage: 0.2,
                subsample: 0.8,
                min_leaf: 2,
            },
            LearnerKind::GbmL2 {
                n_trees: 10,
                max_depth: 3,
                shrinkage: 0.2,
                subsample: 0.8,
                min_leaf: 2,
                l2: 1.0,
            },
        ] {
            let a = train(&kind, &rows, &labels, 42).unwrap();
            let b = train(&kind, &rows, &labels, 42).unwrap();
            assert_eq!(a, b, "kind {:?} not deterministic", kind.name());
            assert_eq!(
                a.predict_proba(&rows).unwrap(),
                b.predict_proba(&rows).unwrap()
            );
        }
    }

    #[test]
    fn full_band_succeeds_on_first_attempt() {
        let (rows, labels) = separable_set(120);
        let banded = train_to_band(
            &LearnerKind::linear_logistic(),
            AucBand::new(0.0, 1.0).unwrap(),
            &rows,
            &labels,
            &rows,
            &labels,
            2,
            100,
            10,
            3,
        )
        .unwrap();
        assert_eq!(banded.attempts_used, 1);
    }

    #[test]
    fn impossible_band_reports_best_attempt() {
        // class_sep = 0 data cannot reach AUC 0.99.
        let spec = crate::synthdata::DatasetSpec {
            n_instances: 400,
            n_features: 4,
            n_informative: 2,
            n_redundant: 0,
            class_sep: 0.0,
            seed: 8,
        };
        let data = crate::synthdata::generate_dataset(&spec).unwrap();
        // Interleave the generator's label blocks so both halves carry both
        // classes.
        let warm_ids: Vec<usize> = (0..100).chain(200..300).collect();
        let eval_ids: Vec<usize> = (100..200).chain(300..400).collect();
        let rows_of = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
            (
                ids.iter().map(|&i| data.features[i].clone()).collect(),
                ids.iter().map(|&i| data.labels[i]).collect(),
            )
        };
        let (warm_rows, warm_labels) = rows_of(&warm_ids);
        let (eval_rows, eval_labels) = rows_of(&eval_ids);
        let err = train_to_band(
            &LearnerKind::linear_logistic(),
            AucBand::new(0.99, 1.0).unwrap(),
            &warm_rows,
            &warm_labels,
            &eval_rows,
            &eval_labels,
            2,
            100,
            5,
            3,
        )
        .unwrap_err();
        match err {
            Error::BandUnreachable { attempts, best, .. } => {
                assert_eq!(attempts, 5);
                assert!(best < 0.8, "best {best} suspiciously high for noise");
            }
            other => panic!("expected BandUnreachable, got {other:?}"),
        }
    }

    #[test]
    fn log_loss_clamps_extreme_probabilities() {
        let loss = log_loss(&[0.0, 1.0], &[1, 0]);
        assert!(loss.is_finite());
    }

    #[test]
    fn model_summary_exposes_metadata_but_no_parameters() {
        let (rows, labels) = separable_set(30);
        let mut model = train(&LearnerKind::linear_logistic(), &rows, &labels, 0).unwrap();
        model.owner = 3;
        model.feature_indices = vec![2, 5];
        let summary = model.summary();
        assert_eq!(summary["kind"]["name"], "linear_logistic");
        assert_eq!(summary["owner"], 3);
        assert_eq!(summary["feature_indices"], serde_json::json!([2, 5]));
        let digest = summary["params_digest"].as_str().unwrap();
        assert_eq!(digest.len(), 64);
        // Nothing resembling weights is present.
        assert!(summary.get("weights").is_none());
        assert!(summary.get("params").is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn probabilities_stay_in_unit_interval(
            seed in 0u64..200,
            n in 10usize..40,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rand::Rng::gen_range(&mut rng, -5.0..5.0)).collect())
                .collect();
            let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
            for kind in [
                LearnerKind::linear_logistic(),
                LearnerKind::cart(),
                LearnerKind::RandomForest { n_trees: 5, max_depth: 3, min_leaf: 1 },
                LearnerKind::Gbm { n_trees: 5, max_depth: 2, shrinkage: 0.3, subsample: 0.7, min_leaf: 1 },
                LearnerKind::GbmL2 { n_trees: 5, max_depth: 2, shrinkage: 0.3, subsample: 0.7, min_leaf: 1, l2: 0.5 },
            ] {
                let model = train(&kind, &rows, &labels, seed).unwrap();
                for p in model.predict_proba(&rows).unwrap() {
                    prop_assert!(p.is_finite());
                    prop_assert!((0.0..=1.0).contains(&p), "{} out of range", p);
                }
            }
        }
    }
}
