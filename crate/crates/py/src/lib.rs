//! Python bindings: dataset generation, learners, AUC, the selection
//! procedure and the scenario runner, exposed as the `c2al_py` module.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use c2al::learners::{LearnerKind, TrainedModel};
use c2al::sampling::Ranking;
use c2al::synthdata::DatasetSpec;

fn to_py_err(err: c2al::Error) -> PyErr {
    if err.is_config_error() {
        PyValueError::new_err(err.to_string())
    } else {
        PyRuntimeError::new_err(err.to_string())
    }
}

/// Generate a balanced synthetic binary dataset.
///
/// Returns `(features, labels)` where `features` is a list of rows.
#[pyfunction]
#[pyo3(signature = (n_instances, n_features, class_sep, seed, n_informative=5, n_redundant=5))]
fn generate_dataset(
    n_instances: usize,
    n_features: usize,
    class_sep: f64,
    seed: u64,
    n_informative: usize,
    n_redundant: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<u8>)> {
    let spec = DatasetSpec {
        n_instances,
        n_features,
        n_informative,
        n_redundant,
        class_sep,
        seed,
    };
    let dataset = c2al::synthdata::generate_dataset(&spec).map_err(to_py_err)?;
    Ok((dataset.features, dataset.labels))
}

/// Rank-based AUC (ties counted half).
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    Ok(c2al::metrics::auc(&scores, &labels)
        .map_err(to_py_err)?
        .value)
}

/// Order instance ids by ascending distance of their probability from 0.5,
/// ties by ascending id.
#[pyfunction]
fn rank_by_uncertainty(probs: BTreeMap<u32, f64>) -> Vec<u32> {
    c2al::sampling::rank_for_query(0, &probs).ids
}

/// Alternate over per-collaborator rankings, skipping already-chosen
/// instances, until `n` unique ids are selected.
///
/// Returns `(chosen, provenance)` with provenance entries
/// `(collaborator, turn)`.
#[pyfunction]
fn round_robin_select(
    rankings: Vec<Vec<u32>>,
    n: usize,
) -> PyResult<(Vec<u32>, Vec<(usize, usize)>)> {
    let rankings: Vec<Ranking> = rankings
        .into_iter()
        .enumerate()
        .map(|(collaborator, ids)| Ranking { collaborator, ids })
        .collect();
    let result = c2al::sampling::round_robin_select(&rankings, n).map_err(to_py_err)?;
    let provenance = result
        .provenance
        .iter()
        .map(|p| (p.collaborator, p.turn))
        .collect();
    Ok((result.chosen, provenance))
}

/// A fitted probabilistic binary classifier.
#[pyclass(name = "Model")]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    /// Train a model. `kind` is the learner config as JSON, for example
    /// `{"name": "random_forest", "n_trees": 50}`.
    #[staticmethod]
    fn train(kind: &str, rows: Vec<Vec<f64>>, labels: Vec<u8>, seed: u64) -> PyResult<Self> {
        let kind: LearnerKind =
            serde_json::from_str(kind).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = c2al::learners::train(&kind, &rows, &labels, seed).map_err(to_py_err)?;
        Ok(PyModel { inner })
    }

    /// Probability of class 1 for each row.
    fn predict_proba(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&rows).map_err(to_py_err)
    }

    fn kind(&self) -> String {
        self.inner.kind.name().to_string()
    }

    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={}, n_inputs={})",
            self.inner.kind.name(),
            self.inner.n_inputs()
        )
    }
}

/// Run a full scenario from a config JSON string and return the summary
/// (the contents of `summary.json`) as a JSON string.
#[pyfunction]
#[pyo3(signature = (config_json, output_dir=None, seeds=None, debug_matrices=false))]
fn run_scenario(
    config_json: &str,
    output_dir: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    debug_matrices: bool,
) -> PyResult<String> {
    let config: c2al::cli::ScenarioConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let summary = c2al::cli::cmd_run(
        &config,
        output_dir.as_deref(),
        seeds.as_deref(),
        debug_matrices,
    )
    .map_err(to_py_err)?;
    serde_json::to_string_pretty(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Aggregate a finished run directory into plot-ready CSVs; returns the
/// paths `(auc_series, importance_bars)`.
#[pyfunction]
fn report(run_dir: &str) -> PyResult<(String, String)> {
    let outputs = c2al::cli::cmd_report(Path::new(run_dir)).map_err(to_py_err)?;
    Ok((
        outputs.auc_series.display().to_string(),
        outputs.importance_bars.display().to_string(),
    ))
}

#[pymodule]
fn c2al_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(rank_by_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(round_robin_select, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_class::<PyModel>()?;
    Ok(())
}
