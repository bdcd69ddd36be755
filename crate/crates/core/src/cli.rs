//! Scenario configs and the `generate` / `run` / `report` commands.
//!
//! A scenario is a single JSON document: dataset spec, partition and split
//! parameters, the round config, a list of session seeds and an output
//! directory. Unknown keys are errors. Each session seed re-derives the
//! dataset, partition and split seeds, so the seed list varies the entire
//! experiment end to end; identical configs reproduce identical bytes.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::permutation_importance;
use crate::protocol::{self, RoundConfig, Session, SessionLog};
use crate::synthdata::{self, DatasetSpec};
use crate::util::{derive_seed, median};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default)]
    pub common_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_warm_size")]
    pub warm_size: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub seed: u64,
}

fn default_warm_size() -> usize {
    100
}
fn default_test_fraction() -> f64 {
    0.3
}

/// One experiment: data, protocol, seeds and output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dataset: DatasetSpec,
    pub partition: PartitionConfig,
    pub split: SplitConfig,
    pub round: RoundConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_importance_repeats")]
    pub importance_repeats: usize,
}

fn default_importance_repeats() -> usize {
    20
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: ScenarioConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.round.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must be nonempty".into()));
        }
        if self.importance_repeats == 0 {
            return Err(Error::InvalidConfig(
                "importance_repeats must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-seed results recorded in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub messages_digest: String,
    pub label_cost: usize,
    pub base_attempts: Vec<usize>,
    /// Band-calibration AUC of each base model (round 0).
    pub initial_auc: Vec<f64>,
    /// Each collaborator's AUC after the final query round.
    pub final_auc: Vec<f64>,
    /// Observer-side model summaries: kind, input columns and a parameter
    /// digest. Parameters themselves never appear anywhere.
    pub base_models: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollaboratorAggregate {
    pub collaborator: usize,
    pub final_auc_median: f64,
    pub final_auc_min: f64,
    pub final_auc_max: f64,
}

/// Contents of `summary.json`: the resolved config plus per-seed and
/// aggregated results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ScenarioConfig,
    pub seeds: Vec<SeedSummary>,
    pub per_collaborator: Vec<CollaboratorAggregate>,
}

fn log_enabled() -> bool {
    matches!(
        std::env::var("C2AL_LOG").ok().as_deref(),
        Some("info") | Some("debug") | Some("trace")
    )
}

macro_rules! run_log {
    ($($arg:tt)*) => {
        if log_enabled() {
            eprintln!($($arg)*);
        }
    };
}

/// Write the scenario's dataset as CSV plus a sidecar JSON echoing the
/// resolved spec. Returns the CSV path.
pub fn cmd_generate(config: &ScenarioConfig, out_override: Option<&Path>) -> Result<PathBuf> {
    let out_dir = out_override.unwrap_or(&config.output_dir);
    fs::create_dir_all(out_dir)?;
    let dataset = synthdata::generate_dataset(&config.dataset)?;

    let csv_path = out_dir.join("dataset.csv");
    let mut file = std::io::BufWriter::new(fs::File::create(&csv_path)?);
    dataset.write_csv(&mut file)?;
    file.flush()?;

    let sidecar = serde_json::json!({
        "spec": config.dataset,
        "seed": config.dataset.seed,
        "digest": dataset.digest(),
    });
    fs::write(
        out_dir.join("dataset.json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    run_log!("generate: wrote {}", csv_path.display());
    Ok(csv_path)
}

/// Build and run one session for a scenario seed.
pub fn build_session(config: &ScenarioConfig, session_seed: u64) -> Result<Session> {
    let dataset_spec = DatasetSpec {
        seed: derive_seed(config.dataset.seed, "scenario_dataset", &[session_seed]),
        ..config.dataset.clone()
    };
    let dataset = synthdata::generate_dataset(&dataset_spec)?;
    let partition = synthdata::partition_features(
        config.dataset.n_features,
        config.round.k(),
        config.partition.common_count,
        derive_seed(config.partition.seed, "scenario_partition", &[session_seed]),
    )?;
    let splits = synthdata::split_dataset(
        &dataset,
        config.round.k(),
        config.split.warm_size,
        config.split.test_fraction,
        derive_seed(config.split.seed, "scenario_split", &[session_seed]),
    )?;
    protocol::init_session(config.round.clone(), dataset, partition, splits, session_seed)
}

/// Execute the scenario for every seed, writing per-seed outputs and the
/// aggregate `summary.json`. Returns the summary.
pub fn cmd_run(
    config: &ScenarioConfig,
    out_override: Option<&Path>,
    seeds_override: Option<&[u64]>,
    debug_matrices: bool,
) -> Result<RunSummary> {
    let mut resolved = config.clone();
    if let Some(out) = out_override {
        resolved.output_dir = out.to_path_buf();
    }
    if let Some(seeds) = seeds_override {
        resolved.seeds = seeds.to_vec();
    }
    resolved.validate()?;

    let out_dir = resolved.output_dir.clone();
    fs::create_dir_all(&out_dir)?;

    let mut seed_summaries = Vec::with_capacity(resolved.seeds.len());
    for &seed in &resolved.seeds {
        run_log!("run: seed {seed} starting");
        let seed_dir = out_dir.join(format!("seed_{seed}"));
        fs::create_dir_all(&seed_dir)?;

        let mut session = build_session(&resolved, seed)?;
        if debug_matrices {
            session.set_debug_matrix_dir(seed_dir.join("training_matrices"));
        }
        let session_log = session.run_session()?;

        let mut messages = std::io::BufWriter::new(fs::File::create(
            seed_dir.join("messages.jsonl"),
        )?);
        session.write_messages(&mut messages)?;
        messages.flush()?;

        write_metrics_csv(&seed_dir.join("metrics.csv"), &session_log)?;
        write_importance_csv(
            &seed_dir.join("importance.csv"),
            &session,
            resolved.importance_repeats,
            derive_seed(seed, "importance", &[]),
        )?;

        let final_auc = final_aucs(&session_log);
        seed_summaries.push(SeedSummary {
            seed,
            messages_digest: session.log_digest()?,
            label_cost: session_log.label_cost,
            base_attempts: session.agents().iter().map(|a| a.base_attempts).collect(),
            initial_auc: session_log
                .initial_metrics
                .iter()
                .map(|m| m.auc)
                .collect(),
            final_auc,
            base_models: session.agents().iter().map(|a| a.base.summary()).collect(),
        });
        run_log!("run: seed {seed} done");
    }

    let k = resolved.round.k();
    let per_collaborator = (0..k)
        .map(|cid| {
            let finals: Vec<f64> = seed_summaries.iter().map(|s| s.final_auc[cid]).collect();
            CollaboratorAggregate {
                collaborator: cid,
                final_auc_median: median(&finals),
                final_auc_min: finals.iter().copied().fold(f64::INFINITY, f64::min),
                final_auc_max: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    let summary = RunSummary {
        config: resolved,
        seeds: seed_summaries,
        per_collaborator,
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// Final-round AUC per collaborator; with q = 0 this is the initial metric.
fn final_aucs(session_log: &SessionLog) -> Vec<f64> {
    let metrics = session_log
        .rounds
        .last()
        .map(|r| &r.metrics)
        .unwrap_or(&session_log.initial_metrics);
    metrics.iter().map(|m| m.auc).collect()
}

/// `metrics.csv`: one row per (query round, collaborator).
fn write_metrics_csv(path: &Path, session_log: &SessionLog) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["round", "collaborator", "model_source", "auc"])?;
    for round in &session_log.rounds {
        for metric in &round.metrics {
            writer.write_record([
                round.round.to_string(),
                metric.collaborator.to_string(),
                metric.model_source.clone(),
                metric.auc.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// `importance.csv`: permutation importance of every input column of each
/// collaborator's final model on the test set.
fn write_importance_csv(
    path: &Path,
    session: &Session,
    repeats: usize,
    seed: u64,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["collaborator", "column", "importance"])?;
    let test_ids = &session.splits().test;
    let labels: Vec<u8> = test_ids
        .iter()
        .map(|&id| session.dataset().label(id))
        .collect::<Result<_>>()?;

    for cid in 0..session.agents().len() {
        let agent = session.agent(cid)?;
        let view = session.view(cid)?;
        let (rows, names): (Vec<Vec<f64>>, Vec<String>) = match &agent.ensemble {
            Some(model) => {
                let view_rows = view.rows(test_ids)?;
                let level1_rows = session.level1_columns(test_ids)?;
                let rows: Vec<Vec<f64>> = view_rows
                    .into_iter()
                    .zip(level1_rows)
                    .map(|(mut row, level1)| {
                        row.extend(level1);
                        row
                    })
                    .collect();
                (rows, model.schema.column_names())
            }
            None => {
                let view_columns = view.columns();
                let absolute: Vec<usize> = agent
                    .base
                    .feature_indices
                    .iter()
                    .map(|&rel| view_columns[rel])
                    .collect();
                let rows = view.rows_at(test_ids, &absolute)?;
                let names = absolute.iter().map(|c| format!("x_{c}")).collect();
                (rows, names)
            }
        };

        let predictor = |input: &[Vec<f64>]| -> Result<Vec<f64>> {
            match &agent.ensemble {
                Some(model) => {
                    let view_width = model.schema.view_columns.len();
                    let view_rows: Vec<Vec<f64>> =
                        input.iter().map(|r| r[..view_width].to_vec()).collect();
                    let level1_rows: Vec<Vec<f64>> =
                        input.iter().map(|r| r[view_width..].to_vec()).collect();
                    crate::ensemble::ensemble_predict(model, &view_rows, &level1_rows)
                }
                None => agent.base.predict_proba(input),
            }
        };

        let report = permutation_importance(
            &predictor,
            &rows,
            &labels,
            &names,
            repeats,
            derive_seed(seed, "collab", &[cid as u64]),
        )?;
        for column in &report.columns {
            writer.write_record([
                cid.to_string(),
                column.name.clone(),
                column.importance.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Aggregated plot data produced by [`cmd_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutputs {
    pub auc_series: PathBuf,
    pub importance_bars: PathBuf,
}

/// Aggregate a run directory into plot-ready CSVs: the AUC trajectory per
/// collaborator (median and min-max band across seeds) and the importance
/// bars. No rendering, data only.
pub fn cmd_report(run_dir: &Path) -> Result<ReportOutputs> {
    let summary_path = run_dir.join("summary.json");
    let summary_text = fs::read_to_string(&summary_path).map_err(|e| {
        Error::ReportInput(format!("cannot read {}: {e}", summary_path.display()))
    })?;
    let summary: RunSummary = serde_json::from_str(&summary_text)
        .map_err(|e| Error::ReportInput(format!("corrupt summary.json: {e}")))?;

    let report_dir = run_dir.join("report");
    fs::create_dir_all(&report_dir)?;

    // round -> collaborator -> per-seed AUC values.
    let mut series: std::collections::BTreeMap<(u32, usize), Vec<f64>> = Default::default();
    // collaborator -> column -> per-seed importances (column order preserved).
    let mut importance: std::collections::BTreeMap<usize, Vec<(String, Vec<f64>)>> =
        Default::default();

    for seed_summary in &summary.seeds {
        let seed_dir = run_dir.join(format!("seed_{}", seed_summary.seed));
        for row in read_csv_rows(&seed_dir.join("metrics.csv"))? {
            let (round, cid, auc) = parse_metrics_row(&row)?;
            series.entry((round, cid)).or_default().push(auc);
        }
        for row in read_csv_rows(&seed_dir.join("importance.csv"))? {
            let (cid, column, value) = parse_importance_row(&row)?;
            let columns = importance.entry(cid).or_default();
            match columns.iter_mut().find(|(name, _)| *name == column) {
                Some((_, values)) => values.push(value),
                None => columns.push((column, vec![value])),
            }
        }
    }

    let auc_series = report_dir.join("auc_series.csv");
    {
        let mut writer = csv::Writer::from_path(&auc_series)?;
        writer.write_record(["collaborator", "round", "median", "min", "max"])?;
        let mut keys: Vec<(u32, usize)> = series.keys().copied().collect();
        keys.sort_by_key(|&(round, cid)| (cid, round));
        for (round, cid) in keys {
            let values = &series[&(round, cid)];
            writer.write_record([
                cid.to_string(),
                round.to_string(),
                median(values).to_string(),
                values.iter().copied().fold(f64::INFINITY, f64::min).to_string(),
                values
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
                    .to_string(),
            ])?;
        }
        writer.flush()?;
    }

    let importance_bars = report_dir.join("importance_bars.csv");
    {
        let mut writer = csv::Writer::from_path(&importance_bars)?;
        writer.write_record(["collaborator", "column", "median", "min", "max"])?;
        for (cid, columns) in &importance {
            for (name, values) in columns {
                writer.write_record([
                    cid.to_string(),
                    name.clone(),
                    median(values).to_string(),
                    values.iter().copied().fold(f64::INFINITY, f64::min).to_string(),
                    values
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max)
                        .to_string(),
                ])?;
            }
        }
        writer.flush()?;
    }

    run_log!("report: wrote {}", report_dir.display());
    Ok(ReportOutputs {
        auc_series,
        importance_bars,
    })
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::ReportInput(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        rows.push(line.split(',').map(str::to_string).collect());
    }
    Ok(rows)
}

fn parse_metrics_row(row: &[String]) -> Result<(u32, usize, f64)> {
    if row.len() != 4 {
        return Err(Error::ReportInput(format!(
            "metrics.csv row has {} fields",
            row.len()
        )));
    }
    let parse = |s: &String, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::ReportInput(format!("bad {what} value '{s}'")))
    };
    Ok((
        parse(&row[0], "round")? as u32,
        parse(&row[1], "collaborator")? as usize,
        parse(&row[3], "auc")?,
    ))
}

fn parse_importance_row(row: &[String]) -> Result<(usize, String, f64)> {
    if row.len() != 3 {
        return Err(Error::ReportInput(format!(
            "importance.csv row has {} fields",
            row.len()
        )));
    }
    let cid: usize = row[0]
        .parse()
        .map_err(|_| Error::ReportInput(format!("bad collaborator '{}'", row[0])))?;
    let value: f64 = row[2]
        .parse()
        .map_err(|_| Error::ReportInput(format!("bad importance '{}'", row[2])))?;
    Ok((cid, row[1].clone(), value))
}
