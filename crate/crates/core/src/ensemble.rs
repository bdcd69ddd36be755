//! Stacked ensembles over a collaborator's own view plus everyone's Level-1
//! probabilities.
//!
//! The training matrix joins three sources that are all reproducible from the
//! message log: the owner's permitted feature columns for each labeled
//! instance, the Level-1 probabilities archived in the round the instance was
//! acquired, and the broadcast labels. Warm-start rows never enter the matrix
//! because peers never scored those private instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::learners::{self, LearnerKind, TrainedModel};
use crate::synthdata::{InstanceId, View};
use crate::{Error, Result};

/// Per-round archive of every collaborator's Level-1 probabilities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Level1Archive {
    rounds: BTreeMap<u32, Vec<BTreeMap<InstanceId, f64>>>,
}

impl Level1Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Archive one round's reports, ordered by collaborator id.
    pub fn record_round(
        &mut self,
        round: u32,
        per_collaborator: Vec<BTreeMap<InstanceId, f64>>,
    ) -> Result<()> {
        if per_collaborator.is_empty() {
            return Err(Error::ProtocolViolation(
                "level-1 archive needs at least one report".into(),
            ));
        }
        for probs in &per_collaborator {
            if probs
                .values()
                .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
            {
                return Err(Error::ProtocolViolation(
                    "level-1 probability outside [0, 1]".into(),
                ));
            }
        }
        if self.rounds.insert(round, per_collaborator).is_some() {
            return Err(Error::ProtocolViolation(format!(
                "round {round} archived twice"
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> Option<usize> {
        self.rounds.values().next().map(Vec::len)
    }

    /// Level-1 values of all collaborators for `id`, taken from the most
    /// recent archived round `<= upto_round` that scored the instance.
    pub fn latest_for(&self, id: InstanceId, upto_round: u32) -> Option<&[BTreeMap<InstanceId, f64>]> {
        self.rounds
            .range(..=upto_round)
            .rev()
            .find(|(_, reports)| reports.iter().all(|probs| probs.contains_key(&id)))
            .map(|(_, reports)| reports.as_slice())
    }

    pub fn rounds(&self) -> impl Iterator<Item = u32> + '_ {
        self.rounds.keys().copied()
    }
}

/// Labels acquired through the protocol, with the round each arrived in.
/// Grows monotonically; a pool instance can only ever be inserted once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStore {
    entries: BTreeMap<InstanceId, (u8, u32)>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: InstanceId, label: u8, round: u32) -> Result<()> {
        if label > 1 {
            return Err(Error::ProtocolViolation(format!(
                "label {label} for instance {id} is not binary"
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::ProtocolViolation(format!(
                "instance {id} labeled twice"
            )));
        }
        self.entries.insert(id, (label, round));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (InstanceId, u8, u32)> + '_ {
        self.entries.iter().map(|(&id, &(y, r))| (id, y, r))
    }

    /// Fingerprint used to check that all collaborators hold identical stores.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::with_capacity(self.entries.len() * 9);
        for (&id, &(label, round)) in &self.entries {
            bytes.extend_from_slice(&id.to_le_bytes());
            bytes.push(label);
            bytes.extend_from_slice(&round.to_le_bytes());
        }
        crate::util::sha256_hex(&bytes)
    }
}

/// Fixed column layout of an ensemble's input: the owner's view columns in
/// ascending feature order, then one Level-1 probability column per
/// collaborator in ascending collaborator id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleInputSchema {
    /// Absolute feature indices of the owner's view, ascending.
    pub view_columns: Vec<usize>,
    pub k: usize,
}

impl EnsembleInputSchema {
    pub fn width(&self) -> usize {
        self.view_columns.len() + self.k
    }

    /// Column names: `x_<feature index>` then `col<collaborator + 1>_proba`.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .view_columns
            .iter()
            .map(|c| format!("x_{c}"))
            .collect();
        names.extend((0..self.k).map(|cid| format!("col{}_proba", cid + 1)));
        names
    }
}

/// A collaborator's stacked model, retrained from scratch whenever enough
/// broadcast labels are available.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub inner: TrainedModel,
    pub schema: EnsembleInputSchema,
    /// Rounds whose labels the model was trained on (inclusive).
    pub trained_on_rounds: (u32, u32),
    pub trained_rows: usize,
}

/// Why an ensemble could not be (re)built this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotReady {
    TooFewLabels { have: usize, need: usize },
    SingleClass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RetrainOutcome {
    Ready(EnsembleModel),
    NotReady(NotReady),
}

/// Join the owner's view, the Level-1 archive and the label store into a
/// training matrix laid out per [`EnsembleInputSchema`], one row per labeled
/// instance in ascending id order.
pub fn build_training_matrix(
    view: &View<'_>,
    archive: &Level1Archive,
    labels: &LabelStore,
) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    if labels.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut rows = Vec::with_capacity(labels.len());
    let mut y = Vec::with_capacity(labels.len());
    for (id, label, acquired_round) in labels.iter() {
        let level1 = archive
            .latest_for(id, acquired_round)
            .ok_or(Error::MissingCoverage(id))?;
        let mut row = view.rows(&[id])?.pop().expect("one row per id");
        for probs in level1 {
            row.push(probs[&id]);
        }
        rows.push(row);
        y.push(label);
    }
    Ok((rows, y))
}

/// Fit the stacked model, or report why it is not ready yet.
pub fn retrain_ensemble(
    kind: &LearnerKind,
    schema: EnsembleInputSchema,
    rows: &[Vec<f64>],
    y: &[u8],
    min_labels: usize,
    trained_on_rounds: (u32, u32),
    seed: u64,
) -> Result<RetrainOutcome> {
    if rows.len() < min_labels {
        return Ok(RetrainOutcome::NotReady(NotReady::TooFewLabels {
            have: rows.len(),
            need: min_labels,
        }));
    }
    let positives = y.iter().filter(|&&label| label == 1).count();
    if positives == 0 || positives == y.len() {
        return Ok(RetrainOutcome::NotReady(NotReady::SingleClass));
    }
    for row in rows {
        if row.len() != schema.width() {
            return Err(Error::ShapeMismatch {
                expected: schema.width(),
                got: row.len(),
            });
        }
    }
    let inner = learners::train(kind, rows, y, seed)?;
    Ok(RetrainOutcome::Ready(EnsembleModel {
        inner,
        schema,
        trained_on_rounds,
        trained_rows: rows.len(),
    }))
}

/// Predict with a stacked model: view rows and Level-1 rows are concatenated
/// per the schema and fed to the inner learner.
pub fn ensemble_predict(
    model: &EnsembleModel,
    view_rows: &[Vec<f64>],
    level1_rows: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if view_rows.len() != level1_rows.len() {
        return Err(Error::ShapeMismatch {
            expected: view_rows.len(),
            got: level1_rows.len(),
        });
    }
    let mut rows = Vec::with_capacity(view_rows.len());
    for (view_row, level1_row) in view_rows.iter().zip(level1_rows) {
        if view_row.len() != model.schema.view_columns.len() {
            return Err(Error::ShapeMismatch {
                expected: model.schema.view_columns.len(),
                got: view_row.len(),
            });
        }
        if level1_row.len() != model.schema.k {
            return Err(Error::ShapeMismatch {
                expected: model.schema.k,
                got: level1_row.len(),
            });
        }
        let mut row = Vec::with_capacity(model.schema.width());
        row.extend_from_slice(view_row);
        row.extend_from_slice(level1_row);
        rows.push(row);
    }
    model.inner.predict_proba(&rows)
}
