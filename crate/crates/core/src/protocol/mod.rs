//! The C2AL round engine.
//!
//! A session holds one agent per collaborator behind a strict trust boundary:
//! agents exchange probability maps and broadcast labels, never rows or
//! parameters. Each query round runs the same five-step cycle — Level-1
//! reports from the base models, Level-2 reports from the ensembles (base
//! fallback until one exists), coordinator selection and label broadcast,
//! ensemble retraining, pool shrink — and every message is appended to a
//! replayable JSONL log. Delivery is serialized in ascending sender id, so
//! the log is byte-stable for a given `(config, dataset, seed)`.

mod wire;

pub use wire::{
    read_jsonl, write_jsonl, BroadcastEntry, BroadcastPayload, InitPayload, Level1Payload,
    Level2Payload, Level2Source, LogRecord, MessageType, Payload, SelectionPayload,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ensemble::{
    build_training_matrix, ensemble_predict, EnsembleInputSchema, EnsembleModel, Level1Archive,
    LabelStore, RetrainOutcome,
};
use crate::learners::{train_to_band, AucBand, LearnerKind, TrainedModel};
use crate::sampling::{round_robin_select, sampling_by_name, Provenance, Ranking};
use crate::synthdata::{Dataset, FeaturePartition, InstanceId, Splits, View};
use crate::util::derive_seed;
use crate::{Error, Result};

/// Per-collaborator protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollaboratorConfig {
    pub kind: LearnerKind,
    pub band: AucBand,
    /// First round at which this collaborator may build its ensemble.
    #[serde(default = "default_start_round")]
    pub ensemble_start_round: u32,
    /// Labels required before the ensemble is built; `None` resolves to `2n`.
    #[serde(default)]
    pub min_labels: Option<usize>,
    /// Learner for the ensemble; `None` means the collaborator's own `kind`.
    #[serde(default)]
    pub ensemble_kind: Option<LearnerKind>,
    /// Feature count for the banded base model.
    #[serde(default = "default_base_features")]
    pub base_features: usize,
    /// Warm-start rows per band attempt.
    #[serde(default = "default_base_instances")]
    pub base_instances: usize,
    #[serde(default = "default_band_attempts")]
    pub max_band_attempts: usize,
}

fn default_start_round() -> u32 {
    1
}
fn default_base_features() -> usize {
    2
}
fn default_base_instances() -> usize {
    100
}
fn default_band_attempts() -> usize {
    200
}

impl CollaboratorConfig {
    pub fn new(kind: LearnerKind, band: AucBand) -> Self {
        CollaboratorConfig {
            kind,
            band,
            ensemble_start_round: default_start_round(),
            min_labels: None,
            ensemble_kind: None,
            base_features: default_base_features(),
            base_instances: default_base_instances(),
            max_band_attempts: default_band_attempts(),
        }
    }
}

/// Session-level protocol parameters. `k` is the collaborator list length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundConfig {
    /// Total query rounds.
    pub q: u32,
    /// Instances acquired per round.
    pub n: usize,
    #[serde(default)]
    pub coordinator: u32,
    #[serde(default = "default_sampling")]
    pub sampling_fn: String,
    pub collaborators: Vec<CollaboratorConfig>,
}

fn default_sampling() -> String {
    "uncertainty".into()
}

impl RoundConfig {
    pub fn k(&self) -> usize {
        self.collaborators.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.collaborators.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one collaborator required".into(),
            ));
        }
        if self.coordinator as usize >= self.k() {
            return Err(Error::InvalidConfig(format!(
                "coordinator {} out of range for k = {}",
                self.coordinator,
                self.k()
            )));
        }
        sampling_by_name(&self.sampling_fn)?;
        for (cid, collab) in self.collaborators.iter().enumerate() {
            collab.kind.validate().map_err(|e| {
                Error::InvalidConfig(format!("collaborator {cid}: {e}"))
            })?;
            collab.band.validate().map_err(|e| {
                Error::InvalidConfig(format!("collaborator {cid}: {e}"))
            })?;
            if let Some(kind) = &collab.ensemble_kind {
                kind.validate().map_err(|e| {
                    Error::InvalidConfig(format!("collaborator {cid} ensemble: {e}"))
                })?;
            }
            if collab.base_features == 0 || collab.base_instances == 0 {
                return Err(Error::InvalidConfig(format!(
                    "collaborator {cid}: base_features and base_instances must be positive"
                )));
            }
            if collab.ensemble_start_round == 0 {
                return Err(Error::InvalidConfig(format!(
                    "collaborator {cid}: ensemble_start_round counts from 1"
                )));
            }
        }
        Ok(())
    }

    /// Effective label threshold for one collaborator's ensemble.
    pub fn min_labels_of(&self, cid: usize) -> usize {
        self.collaborators[cid].min_labels.unwrap_or(2 * self.n)
    }
}

/// One collaborator's private state as the session advances.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub cid: usize,
    pub base: TrainedModel,
    pub base_attempts: usize,
    /// Band-calibration AUC on the observer's test split.
    pub base_eval_auc: f64,
    pub ensemble: Option<EnsembleModel>,
    pub archive: Level1Archive,
    pub store: LabelStore,
}

/// Observer metrics for one collaborator at one point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetric {
    pub collaborator: usize,
    pub model_source: String,
    pub auc: f64,
}

/// Observer-side record of a completed round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub chosen: Vec<InstanceId>,
    pub provenance: Vec<Provenance>,
    pub level2_sources: Vec<Level2Source>,
    pub retrained: Vec<bool>,
    pub ensemble_present: Vec<bool>,
    pub pool_size_after: usize,
    pub store_digests: Vec<String>,
    /// Filled by the session loop after step 5.
    pub metrics: Vec<RoundMetric>,
}

/// Everything the observer keeps from a full session run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionLog {
    /// Base-model metrics before any query (round 0).
    pub initial_metrics: Vec<RoundMetric>,
    pub rounds: Vec<RoundLog>,
    pub label_cost: usize,
}

/// Live session state: configuration, data handles, agents, pool and log.
#[derive(Debug, Clone)]
pub struct Session {
    config: RoundConfig,
    dataset: Dataset,
    partition: FeaturePartition,
    splits: Splits,
    pool: BTreeSet<InstanceId>,
    initial_pool_size: usize,
    agents: Vec<AgentState>,
    log: Vec<LogRecord>,
    round: u32,
    label_cost: usize,
    session_seed: u64,
    debug_matrix_dir: Option<PathBuf>,
}

/// Read ground-truth labels for acquired instances (the simulated annotator).
pub fn acquire_labels(dataset: &Dataset, ids: &[InstanceId]) -> Result<Vec<(InstanceId, u8)>> {
    ids.iter()
        .map(|&id| dataset.label(id).map(|y| (id, y)))
        .collect()
}

/// Report coverage check: a Level-1/Level-2 report must score exactly the
/// current pool. Violations abort the round.
pub fn check_report_coverage(
    probs: &BTreeMap<InstanceId, f64>,
    pool: &BTreeSet<InstanceId>,
    sender: usize,
) -> Result<()> {
    if probs.len() != pool.len() || !probs.keys().all(|id| pool.contains(id)) {
        return Err(Error::ProtocolViolation(format!(
            "report from collaborator {sender} does not cover the pool \
             ({} scored, pool has {})",
            probs.len(),
            pool.len()
        )));
    }
    if probs
        .values()
        .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
    {
        return Err(Error::ProtocolViolation(format!(
            "report from collaborator {sender} carries a probability outside [0, 1]"
        )));
    }
    Ok(())
}

/// Fallback rule check: a base-fallback Level-2 report must equal the
/// sender's Level-1 report of the same round.
pub fn check_fallback_rule(
    level2: &Level2Payload,
    own_level1: &BTreeMap<InstanceId, f64>,
    sender: usize,
) -> Result<()> {
    if level2.source == Level2Source::BaseFallback && &level2.probs != own_level1 {
        return Err(Error::ProtocolViolation(format!(
            "collaborator {sender} sent a base-fallback report that differs \
             from its level-1 report"
        )));
    }
    Ok(())
}

/// Bootstrap a session: banded base models from each warm-start view, full
/// pool, empty archives and stores, and the init record in the log.
pub fn init_session(
    config: RoundConfig,
    dataset: Dataset,
    partition: FeaturePartition,
    splits: Splits,
    session_seed: u64,
) -> Result<Session> {
    config.validate()?;
    let k = config.k();
    if partition.k() != k {
        return Err(Error::InvalidConfig(format!(
            "partition has {} views for {k} collaborators",
            partition.k()
        )));
    }
    if splits.warm_start.len() != k {
        return Err(Error::InvalidConfig(format!(
            "splits carry {} warm-start sets for {k} collaborators",
            splits.warm_start.len()
        )));
    }

    let test_labels: Vec<u8> = splits
        .test
        .iter()
        .map(|&id| dataset.label(id))
        .collect::<Result<_>>()?;

    let mut agents = Vec::with_capacity(k);
    for (cid, collab) in config.collaborators.iter().enumerate() {
        let view = View::new(&dataset, &partition, cid)?;
        let warm_ids = &splits.warm_start[cid];
        let warm_rows = view.rows(warm_ids)?;
        let warm_labels: Vec<u8> = warm_ids
            .iter()
            .map(|&id| dataset.label(id))
            .collect::<Result<_>>()?;
        let eval_rows = view.rows(&splits.test)?;

        let banded = train_to_band(
            &collab.kind,
            collab.band,
            &warm_rows,
            &warm_labels,
            &eval_rows,
            &test_labels,
            collab.base_features,
            collab.base_instances,
            collab.max_band_attempts,
            derive_seed(session_seed, "base_model", &[cid as u64]),
        )
        .map_err(|e| match e {
            Error::BandUnreachable {
                low,
                high,
                attempts,
                best,
                ..
            } => Error::BandUnreachable {
                collaborator: cid,
                low,
                high,
                attempts,
                best,
            },
            other => other,
        })?;

        let mut base = banded.model;
        base.owner = cid;
        agents.push(AgentState {
            cid,
            base,
            base_attempts: banded.attempts_used,
            base_eval_auc: banded.eval_auc,
            ensemble: None,
            archive: Level1Archive::new(),
            store: LabelStore::new(),
        });
    }

    let pool: BTreeSet<InstanceId> = splits.pool.iter().copied().collect();
    let init = InitPayload {
        q: config.q,
        n: config.n,
        k,
        coordinator: config.coordinator,
        sampling_fn: config.sampling_fn.clone(),
        pool_size: pool.len(),
        dataset_digest: dataset.digest(),
        session_seed,
    };
    let log = vec![LogRecord::new(0, MessageType::Init, None, &init)?];

    Ok(Session {
        initial_pool_size: pool.len(),
        config,
        dataset,
        partition,
        splits,
        pool,
        agents,
        log,
        round: 0,
        label_cost: 0,
        session_seed,
        debug_matrix_dir: None,
    })
}

impl Session {
    pub fn config(&self) -> &RoundConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn partition(&self) -> &FeaturePartition {
        &self.partition
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn pool(&self) -> &BTreeSet<InstanceId> {
        &self.pool
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, cid: usize) -> Result<&AgentState> {
        self.agents
            .get(cid)
            .ok_or_else(|| Error::InvalidConfig(format!("no collaborator {cid}")))
    }

    pub fn view(&self, cid: usize) -> Result<View<'_>> {
        View::new(&self.dataset, &self.partition, cid)
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn label_cost(&self) -> usize {
        self.label_cost
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn session_seed(&self) -> u64 {
        self.session_seed
    }

    /// Dump each round's ensemble training matrices under this directory.
    pub fn set_debug_matrix_dir(&mut self, dir: PathBuf) {
        self.debug_matrix_dir = Some(dir);
    }

    pub fn write_messages<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_jsonl(&self.log, out)
    }

    pub fn log_digest(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_messages(&mut buf)?;
        Ok(crate::util::sha256_hex(&buf))
    }

    /// A collaborator's base-model probabilities for the given instances.
    pub fn base_scores(&self, cid: usize, ids: &[InstanceId]) -> Result<Vec<f64>> {
        let agent = self.agent(cid)?;
        base_scores_of(&self.dataset, &self.partition, agent, ids)
    }

    /// Level-1 columns for the given instances: one row per instance holding
    /// every collaborator's base probability, ascending collaborator id.
    /// Observer privilege (used for test-set evaluation only).
    pub fn level1_columns(&self, ids: &[InstanceId]) -> Result<Vec<Vec<f64>>> {
        let mut per_collab = Vec::with_capacity(self.agents.len());
        for agent in &self.agents {
            per_collab.push(base_scores_of(
                &self.dataset,
                &self.partition,
                agent,
                ids,
            )?);
        }
        Ok((0..ids.len())
            .map(|row| per_collab.iter().map(|col| col[row]).collect())
            .collect())
    }

    /// Execute one full query round (steps 2 through 5).
    pub fn run_round(&mut self) -> Result<RoundLog> {
        let k = self.config.k();
        let n = self.config.n;
        if self.pool.len() < n {
            return Err(Error::PoolExhausted {
                remaining: self.pool.len(),
                needed: n,
            });
        }
        let round = self.round + 1;
        let pool_ids: Vec<InstanceId> = self.pool.iter().copied().collect();

        // Step 2: Level-1 reports from every base model, ascending sender id.
        let mut level1: Vec<BTreeMap<InstanceId, f64>> = Vec::with_capacity(k);
        for cid in 0..k {
            let probs = base_scores_of(&self.dataset, &self.partition, &self.agents[cid], &pool_ids)?;
            let report: BTreeMap<InstanceId, f64> =
                pool_ids.iter().copied().zip(probs).collect();
            check_report_coverage(&report, &self.pool, cid)?;
            self.log.push(LogRecord::new(
                round,
                MessageType::Level1,
                Some(cid as u32),
                &Level1Payload {
                    probs: report.clone(),
                },
            )?);
            level1.push(report);
        }

        // Every agent archives the full set of Level-1 reports.
        for agent in &mut self.agents {
            agent.archive.record_round(round, level1.clone())?;
        }

        // Step 3: Level-2 reports, from the ensemble when one exists.
        let mut level2: Vec<Level2Payload> = Vec::with_capacity(k);
        for cid in 0..k {
            let payload = match &self.agents[cid].ensemble {
                Some(model) => {
                    let view = View::new(&self.dataset, &self.partition, cid)?;
                    let view_rows = view.rows(&pool_ids)?;
                    let level1_rows: Vec<Vec<f64>> = pool_ids
                        .iter()
                        .map(|id| level1.iter().map(|report| report[id]).collect())
                        .collect();
                    let probs = ensemble_predict(model, &view_rows, &level1_rows)?;
                    Level2Payload {
                        probs: pool_ids.iter().copied().zip(probs).collect(),
                        source: Level2Source::Ensemble,
                    }
                }
                None => Level2Payload {
                    probs: level1[cid].clone(),
                    source: Level2Source::BaseFallback,
                },
            };
            check_report_coverage(&payload.probs, &self.pool, cid)?;
            check_fallback_rule(&payload, &level1[cid], cid)?;
            self.log.push(LogRecord::new(
                round,
                MessageType::Level2,
                Some(cid as u32),
                &payload,
            )?);
            level2.push(payload);
        }

        // Step 4: the coordinator ranks, selects, acquires and broadcasts.
        let strategy = sampling_by_name(&self.config.sampling_fn)?;
        let rankings: Vec<Ranking> = level2
            .iter()
            .enumerate()
            .map(|(cid, payload)| strategy.rank(cid, &payload.probs))
            .collect();
        let selection = round_robin_select(&rankings, n)?;
        self.log.push(LogRecord::new(
            round,
            MessageType::Selection,
            Some(self.config.coordinator),
            &SelectionPayload {
                chosen: selection.chosen.clone(),
                provenance: selection.provenance.clone(),
            },
        )?);

        let labels = acquire_labels(&self.dataset, &selection.chosen)?;
        self.label_cost += selection.chosen.len();
        let entries: Vec<BroadcastEntry> = labels
            .iter()
            .zip(&selection.provenance)
            .map(|(&(id, label), prov)| BroadcastEntry {
                id,
                label,
                supplier: prov.collaborator as u32,
            })
            .collect();
        if entries.len() != n {
            return Err(Error::ProtocolViolation(format!(
                "broadcast carries {} entries, expected {n}",
                entries.len()
            )));
        }
        self.log.push(LogRecord::new(
            round,
            MessageType::LabelBroadcast,
            Some(self.config.coordinator),
            &BroadcastPayload {
                entries: entries.clone(),
            },
        )?);

        // Step 5: identical ingestion everywhere, then eligible retraining.
        for agent in &mut self.agents {
            for entry in &entries {
                agent.store.insert(entry.id, entry.label, round)?;
            }
        }

        let mut retrained = vec![false; k];
        for cid in 0..k {
            let collab = &self.config.collaborators[cid];
            if round < collab.ensemble_start_round {
                continue;
            }
            let view = View::new(&self.dataset, &self.partition, cid)?;
            let agent = &self.agents[cid];
            let (rows, y) = build_training_matrix(&view, &agent.archive, &agent.store)?;
            if let Some(dir) = &self.debug_matrix_dir {
                dump_training_matrix(dir, round, cid, &view, &rows, &y)?;
            }
            let schema = EnsembleInputSchema {
                view_columns: view.columns(),
                k,
            };
            let kind = collab.ensemble_kind.as_ref().unwrap_or(&collab.kind);
            let outcome = crate::ensemble::retrain_ensemble(
                kind,
                schema,
                &rows,
                &y,
                self.config.min_labels_of(cid),
                (1, round),
                derive_seed(self.session_seed, "ensemble", &[cid as u64, u64::from(round)]),
            )?;
            if let RetrainOutcome::Ready(mut model) = outcome {
                model.inner.owner = cid;
                self.agents[cid].ensemble = Some(model);
                retrained[cid] = true;
            }
        }

        // Pool shrinks by exactly the chosen ids.
        for id in &selection.chosen {
            self.pool.remove(id);
        }
        self.round = round;

        let store_digests: Vec<String> =
            self.agents.iter().map(|a| a.store.digest()).collect();
        if store_digests.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::ProtocolViolation(
                "label stores diverged after broadcast".into(),
            ));
        }
        let expected_pool = self.initial_pool_size - (round as usize) * n;
        if self.pool.len() != expected_pool {
            return Err(Error::ProtocolViolation(format!(
                "pool conservation broken: {} left, expected {expected_pool}",
                self.pool.len()
            )));
        }

        Ok(RoundLog {
            round,
            chosen: selection.chosen,
            provenance: selection.provenance,
            level2_sources: level2.iter().map(|p| p.source).collect(),
            retrained,
            ensemble_present: self.agents.iter().map(|a| a.ensemble.is_some()).collect(),
            pool_size_after: self.pool.len(),
            store_digests,
            metrics: Vec::new(),
        })
    }

    /// Run all `q` rounds, attaching observer metrics after each one.
    pub fn run_session(&mut self) -> Result<SessionLog> {
        let needed = self.config.q as usize * self.config.n;
        if self.pool.len() < needed {
            return Err(Error::PoolExhausted {
                remaining: self.pool.len(),
                needed,
            });
        }
        let initial_metrics = self.observer_metrics()?;
        let mut rounds = Vec::with_capacity(self.config.q as usize);
        for _ in 0..self.config.q {
            let mut round_log = self.run_round()?;
            round_log.metrics = self.observer_metrics()?;
            rounds.push(round_log);
        }
        Ok(SessionLog {
            initial_metrics,
            rounds,
            label_cost: self.label_cost,
        })
    }

    /// Test AUC of every collaborator's current model.
    pub fn observer_metrics(&self) -> Result<Vec<RoundMetric>> {
        let mut metrics = Vec::with_capacity(self.agents.len());
        for cid in 0..self.agents.len() {
            let score = crate::metrics::evaluate_collaborator(self, cid, &self.splits.test)?;
            let source = if self.agents[cid].ensemble.is_some() {
                crate::metrics::SOURCE_ENSEMBLE
            } else {
                crate::metrics::SOURCE_BASE
            };
            metrics.push(RoundMetric {
                collaborator: cid,
                model_source: source.to_string(),
                auc: score.value,
            });
        }
        Ok(metrics)
    }
}

/// Base-model probabilities for one agent over the given instances, reading
/// features only through the agent's own view.
fn base_scores_of(
    dataset: &Dataset,
    partition: &FeaturePartition,
    agent: &AgentState,
    ids: &[InstanceId],
) -> Result<Vec<f64>> {
    let view = View::new(dataset, partition, agent.cid)?;
    let view_columns = view.columns();
    let absolute: Vec<usize> = agent
        .base
        .feature_indices
        .iter()
        .map(|&rel| view_columns[rel])
        .collect();
    let rows = view.rows_at(ids, &absolute)?;
    agent.base.predict_proba(&rows)
}

fn dump_training_matrix(
    dir: &std::path::Path,
    round: u32,
    cid: usize,
    view: &View<'_>,
    rows: &[Vec<f64>],
    y: &[u8],
) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("round_{round:02}_collab_{cid}.csv"));
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let schema = EnsembleInputSchema {
        view_columns: view.columns(),
        k: rows.first().map_or(0, |r| r.len() - view.width()),
    };
    let mut header = schema.column_names().join(",");
    header.push_str(",label");
    writeln!(out, "{header}")?;
    for (row, label) in rows.iter().zip(y) {
        let mut line = row
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        line.push_str(&format!(",{label}"));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Replay check: recompute each round's selection from the logged Level-2
/// reports and compare with the logged selection. Returns the number of
/// rounds verified.
pub fn verify_log_selections(records: &[LogRecord]) -> Result<usize> {
    let init = records
        .iter()
        .find(|r| r.msg_type == MessageType::Init)
        .ok_or_else(|| Error::ProtocolViolation("log has no init record".into()))?;
    let Payload::Init(init) = init.decode()? else {
        unreachable!("decode matches msg_type");
    };
    let strategy = sampling_by_name(&init.sampling_fn)?;

    let mut verified = 0;
    let mut level2_by_round: BTreeMap<u32, Vec<(u32, Level2Payload)>> = BTreeMap::new();
    for record in records {
        record.verify_digest()?;
        match record.decode()? {
            Payload::Level2(payload) => {
                let sender = record.sender.ok_or_else(|| {
                    Error::ProtocolViolation("level-2 record without sender".into())
                })?;
                level2_by_round
                    .entry(record.round)
                    .or_default()
                    .push((sender, payload));
            }
            Payload::Selection(selection) => {
                let mut reports = level2_by_round
                    .remove(&record.round)
                    .ok_or_else(|| {
                        Error::ProtocolViolation(format!(
                            "selection in round {} precedes level-2 reports",
                            record.round
                        ))
                    })?;
                reports.sort_by_key(|(sender, _)| *sender);
                let rankings: Vec<Ranking> = reports
                    .iter()
                    .map(|(sender, payload)| strategy.rank(*sender as usize, &payload.probs))
                    .collect();
                let replayed = round_robin_select(&rankings, init.n)?;
                if replayed.chosen != selection.chosen {
                    return Err(Error::ProtocolViolation(format!(
                        "replayed selection disagrees in round {}",
                        record.round
                    )));
                }
                verified += 1;
            }
            _ => {}
        }
    }
    Ok(verified)
}

/// Structural trust-boundary scan over a message log.
///
/// Verifies that every record parses into one of the protocol's strict
/// payload schemas (which have no field that could carry a feature vector or
/// model parameters), that digests match, and that every probability lies in
/// `[0, 1]`.
pub fn scan_trust_boundary(records: &[LogRecord]) -> Result<()> {
    for record in records {
        record.verify_digest()?;
        match record.decode()? {
            Payload::Init(_) => {}
            Payload::Level1(p) => check_probs_in_range(&p.probs)?,
            Payload::Level2(p) => check_probs_in_range(&p.probs)?,
            Payload::Selection(_) => {}
            Payload::LabelBroadcast(p) => {
                if p.entries.iter().any(|e| e.label > 1) {
                    return Err(Error::ProtocolViolation(
                        "broadcast carries a non-binary label".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_probs_in_range(probs: &BTreeMap<InstanceId, f64>) -> Result<()> {
    if probs
        .values()
        .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
    {
        return Err(Error::ProtocolViolation(
            "probability outside [0, 1] in logged report".into(),
        ));
    }
    Ok(())
}
