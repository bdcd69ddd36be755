//! Observer-side evaluation: AUC, per-collaborator test performance, and
//! permutation feature importance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::Session;
use crate::synthdata::InstanceId;
use crate::util::derive_seed;
use crate::{Error, Result};

/// AUC with the class counts it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucScore {
    pub value: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Rank-based AUC (Mann-Whitney), ties counted half.
///
/// Equals `(#concordant pairs + 0.5 * #tied pairs) / (n_pos * n_neg)`,
/// computed in `O(N log N)` through the rank sum of the positives. Because
/// average ranks are half-integers, the numerator is exact in `f64` and the
/// result matches the pairwise definition bit for bit.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<AucScore> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidTrainingData(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidTrainingData("non-finite score".into()));
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average 1-based ranks over tie groups, accumulated for positives only.
    let mut rank_sum_pos = 0.0_f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(AucScore {
        value: u / (n_pos as f64 * n_neg as f64),
        n_pos,
        n_neg,
    })
}

/// Mean AUC drop per input column under within-column shuffling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub columns: Vec<ColumnImportance>,
    pub repeats: usize,
    pub seed: u64,
    pub baseline_auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnImportance {
    pub name: String,
    pub importance: f64,
}

/// Batch prediction closure: rows in, class-1 probabilities out.
pub type Predictor<'a> = dyn Fn(&[Vec<f64>]) -> Result<Vec<f64>> + 'a;

/// Model-agnostic permutation importance.
///
/// For each column: importance = baseline AUC minus the mean AUC over
/// `repeats` independent within-column shuffles, each with a seed derived
/// from `(seed, column, repeat)`.
pub fn permutation_importance(
    predict: &Predictor<'_>,
    rows: &[Vec<f64>],
    labels: &[u8],
    column_names: &[String],
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if column_names.len() != width {
        return Err(Error::InvalidConfig(format!(
            "{} column names for {width} columns",
            column_names.len()
        )));
    }
    let baseline = auc(&predict(rows)?, labels)?.value;

    let mut columns = Vec::with_capacity(width);
    let mut permuted = rows.to_vec();
    for (column, name) in column_names.iter().enumerate() {
        let mut drop_sum = 0.0;
        for repeat in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                "perm_importance",
                &[column as u64, repeat as u64],
            ));
            // Fisher-Yates over the column values only.
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                let tmp = permuted[i][column];
                permuted[i][column] = permuted[j][column];
                permuted[j][column] = tmp;
            }
            let shuffled_auc = auc(&predict(&permuted)?, labels)?.value;
            drop_sum += baseline - shuffled_auc;
            // Restore the column before the next shuffle.
            for (restored, original) in permuted.iter_mut().zip(rows) {
                restored[column] = original[column];
            }
        }
        columns.push(ColumnImportance {
            name: name.clone(),
            importance: drop_sum / repeats as f64,
        });
    }
    Ok(ImportanceReport {
        columns,
        repeats,
        seed,
        baseline_auc: baseline,
    })
}

/// Which model a metric was computed from.
pub const SOURCE_BASE: &str = "base";
pub const SOURCE_ENSEMBLE: &str = "ensemble";

/// Test AUC of one collaborator's current model.
///
/// Uses the ensemble when one exists, otherwise the base model. For an
/// ensemble, the Level-1 input columns are every collaborator's base-model
/// probabilities on the test rows, recomputed here under observer privilege;
/// agents never see these values.
pub fn evaluate_collaborator(
    session: &Session,
    collaborator: usize,
    test_ids: &[InstanceId],
) -> Result<AucScore> {
    let scores = collaborator_test_scores(session, collaborator, test_ids)?;
    let labels: Vec<u8> = test_ids
        .iter()
        .map(|&id| session.dataset().label(id))
        .collect::<Result<_>>()?;
    auc(&scores, &labels)
}

/// The probability vector behind [`evaluate_collaborator`]; also the
/// prediction path the importance report is computed on.
pub fn collaborator_test_scores(
    session: &Session,
    collaborator: usize,
    test_ids: &[InstanceId],
) -> Result<Vec<f64>> {
    let agent = session.agent(collaborator)?;
    match &agent.ensemble {
        None => session.base_scores(collaborator, test_ids),
        Some(model) => {
            let view = session.view(collaborator)?;
            let view_rows = view.rows(test_ids)?;
            let level1_rows = session.level1_columns(test_ids)?;
            crate::ensemble::ensemble_predict(model, &view_rows, &level1_rows)
        }
    }
}
